import json
import random
from datetime import timedelta

import pytest

from propdetect.corpus import (Corpus, Message, build_accounts, diff_deleted,
                               flatten_rich_text, merge, parse_export,
                               parse_stream)
from propdetect.errors import DataError, ParseError

from conftest import T0, corpus_of, msg


def write_export(path, records, channel="chan"):
    path.write_text(json.dumps({"id": channel, "messages": records}),
                    encoding="utf-8")
    return path


class TestParseExport:
    def test_well_formed(self, tmp_path):
        records = [
            {"id": 1, "date": "2023-08-16T12:00:00", "from_id": "u1", "text": "hi"},
            {"id": 2, "date": "2023-08-16T12:01:00", "from_id": "u2", "text": "yo",
             "reply_to_message_id": 1},
            {"id": 3, "date": "2023-08-16T12:02:00", "from_id": "u1", "text": "ok"},
        ]
        result = parse_export(write_export(tmp_path / "e.json", records))
        assert len(result.messages) == 3
        assert result.malformed_count == 0
        assert all(m.source == "historical" for m in result.messages)
        assert result.messages[1].reply_to == 1

    def test_missing_id_reported(self, tmp_path):
        records = [
            {"id": 1, "date": "2023-08-16T12:00:00", "text": "a"},
            {"date": "2023-08-16T12:01:00", "text": "no id"},
            {"id": 3, "date": "2023-08-16T12:02:00", "text": "c"},
        ]
        result = parse_export(write_export(tmp_path / "e.json", records))
        assert len(result.messages) == 2
        assert result.malformed == [(1, "record missing 'id'")]

    def test_overlapping_windows_union(self, tmp_path):
        # two overlapping exports of one channel must merge to the exact union
        all_records = [
            {"id": i, "date": f"2023-08-16T12:{i:02d}:00", "from_id": "u", "text": f"m{i}"}
            for i in range(20)
        ]
        a = parse_export(write_export(tmp_path / "a.json", all_records[:14]))
        b = parse_export(write_export(tmp_path / "b.json", all_records[8:]))
        corpus = merge([a.messages, b.messages])
        expected = {("chan", r["id"]) for r in all_records}
        assert set(corpus.messages) == expected

    def test_rich_text_flattening(self, tmp_path):
        records = [{
            "id": 1, "date": "2023-08-16T12:00:00",
            "text": ["see ", {"type": "link", "text": "http://x.ru"}, " now"],
        }]
        result = parse_export(write_export(tmp_path / "e.json", records))
        assert result.messages[0].text == "see http://x.ru now"

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            parse_export(tmp_path / "missing.json")

    def test_non_export_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"nope": 1}', encoding="utf-8")
        with pytest.raises(ParseError):
            parse_export(path)


class TestParseStream:
    def test_five_lines(self, tmp_path):
        path = tmp_path / "s.jsonl"
        lines = [json.dumps({"channel_id": "c", "id": i,
                             "date": "2023-08-16T12:00:00Z", "from_id": "u",
                             "text": f"m{i}"}) for i in range(5)]
        path.write_text("\n".join(lines), encoding="utf-8")
        result = parse_stream(path)
        assert len(result.messages) == 5
        assert all(m.source == "realtime" for m in result.messages)

    def test_invalid_utf8_line_reported(self, tmp_path):
        path = tmp_path / "s.jsonl"
        good = json.dumps({"channel_id": "c", "id": 1,
                           "date": "2023-08-16T12:00:00Z", "text": "ok"})
        path.write_bytes(good.encode() + b"\n\xff\xfe broken\n" + good.replace('"id": 1', '"id": 2').encode() + b"\n")
        result = parse_stream(path)
        assert len(result.messages) == 2
        assert result.malformed == [(2, "invalid UTF-8")]

    def test_reply_event(self, tmp_path):
        path = tmp_path / "s.jsonl"
        path.write_text(json.dumps({
            "channel_id": "c", "id": 9, "date": "2023-08-16T12:00:00Z",
            "text": "re", "reply_to_message_id": 5, "from_id": "u",
        }), encoding="utf-8")
        result = parse_stream(path)
        assert result.messages[0].reply_to == 5


def test_flatten_rich_text_variants():
    assert flatten_rich_text(None) == ""
    assert flatten_rich_text("plain") == "plain"
    assert flatten_rich_text(["a", {"type": "bold", "text": "b"}, "c"]) == "abc"


class TestMerge:
    def test_disjoint_batches_sum(self):
        a = [msg(mid=i) for i in range(3)]
        b = [msg(mid=i) for i in range(3, 8)]
        assert len(merge([a, b])) == 8

    def test_idempotent(self):
        batch = [msg(mid=i) for i in range(5)]
        assert len(merge([batch, batch])) == 5

    def test_order_independent(self):
        a = [msg(mid=i, text=f"t{i}") for i in range(4)]
        b = [msg(mid=i, text=f"t{i}") for i in range(2, 6)]
        left = merge([a, b])
        right = merge([b, a])
        assert {k: m.to_dict() for k, m in left.messages.items()} == \
               {k: m.to_dict() for k, m in right.messages.items()}

    def test_random_dedup_matches_hash_set(self):
        rng = random.Random(5)
        messages = []
        for _ in range(1000):
            mid = rng.randrange(900)  # ~10% planted duplicates
            messages.append(msg(mid=mid, minutes=mid, text=f"t{mid}"))
        corpus = merge([messages])
        assert len(corpus) == len({("ch", m.message_id) for m in messages})

    def test_realtime_text_wins_conflict(self):
        hist = msg(mid=1, text="after moderation", source="historical")
        real = msg(mid=1, text="original text", source="realtime")
        corpus = merge([[hist], [real]])
        merged = corpus.messages[("ch", 1)]
        assert merged.text == "original text"
        assert merged.source == "historical"  # key was seen historically

    def test_reply_index_inverse(self):
        corpus = corpus_of(
            msg(mid=1), msg(mid=2, reply_to=1, minutes=1),
            msg(mid=3, reply_to=1, minutes=2), msg(mid=4, reply_to=99, minutes=3),
        )
        assert corpus.replies_to[("ch", 1)] == [("ch", 2), ("ch", 3)]
        for target, repliers in corpus.replies_to.items():
            for r in repliers:
                assert (corpus.messages[r].channel_id,
                        corpus.messages[r].reply_to) == target
        assert ("ch", 4) in corpus.dangling

    def test_dangling_includes_future_target(self):
        corpus = corpus_of(msg(mid=1, minutes=10), msg(mid=2, reply_to=1, minutes=0))
        assert ("ch", 2) in corpus.dangling


class TestDiffDeleted:
    def test_simple_deletion(self):
        hist = [msg(mid=1, source="historical"), msg(mid=3, minutes=2, source="historical")]
        real = [msg(mid=1, source="realtime"), msg(mid=2, minutes=1, source="realtime"),
                msg(mid=3, minutes=2, source="realtime")]
        corpus = merge([hist, real])
        counts = diff_deleted(corpus)
        assert counts == {"ch": 1}
        assert corpus.messages[("ch", 2)].deleted
        assert not corpus.messages[("ch", 1)].deleted

    def test_identical_feeds_no_deletions(self):
        hist = [msg(mid=i, minutes=i, source="historical") for i in range(4)]
        real = [msg(mid=i, minutes=i, source="realtime") for i in range(4)]
        assert diff_deleted(merge([hist, real])) == {"ch": 0}

    def test_no_overlap_is_error(self):
        hist = [msg(mid=1, source="historical")]
        with pytest.raises(DataError):
            diff_deleted(merge([hist]))

    def test_planted_ratio_recovered(self):
        rng = random.Random(7)
        all_msgs = [msg(mid=i, minutes=i, text=f"m{i}") for i in range(200)]
        deleted = set(rng.sample(range(1, 199), 30))  # keep boundary messages
        hist = [msg(mid=i, minutes=i, text=f"m{i}", source="historical")
                for i in range(200) if i not in deleted]
        real = [msg(mid=i, minutes=i, text=f"m{i}", source="realtime")
                for i in range(200)]
        corpus = merge([hist, real])
        counts = diff_deleted(corpus)
        assert counts["ch"] == len(deleted)
        recovered = {k[1] for k, m in corpus.messages.items() if m.deleted}
        assert recovered == deleted

    def test_brute_force_invariant(self, default_synth):
        corpus = default_synth.corpus
        hist_keys = {k for k, m in corpus.messages.items() if m.source == "historical"}
        for key, m in corpus.messages.items():
            if m.deleted:
                assert m.source == "realtime" and key not in hist_keys


class TestBuildAccounts:
    def test_single_message_account(self):
        accounts = build_accounts(corpus_of(msg(mid=1, account="solo")))
        assert accounts[0].first_seen == accounts[0].last_seen
        assert accounts[0].lifespan_hours == 0.0

    def test_multi_channel_account(self):
        corpus = corpus_of(
            msg(channel="a", mid=1, account="x"),
            msg(channel="b", mid=1, account="x", minutes=5),
            msg(channel="c", mid=1, account="x", minutes=9),
        )
        acct = build_accounts(corpus)[0]
        assert acct.channels_active == {"a", "b", "c"}

    def test_matches_group_by_oracle(self, small_synth):
        corpus = small_synth.corpus
        counts, firsts, lasts = {}, {}, {}
        for m in corpus.iter_messages():
            if m.account_id is None:
                continue
            counts[m.account_id] = counts.get(m.account_id, 0) + 1
            firsts[m.account_id] = min(firsts.get(m.account_id, m.timestamp), m.timestamp)
            lasts[m.account_id] = max(lasts.get(m.account_id, m.timestamp), m.timestamp)
        accounts = {a.account_id: a for a in build_accounts(corpus)}
        assert set(accounts) == set(counts)
        for aid, acct in accounts.items():
            assert len(acct.message_ids) == counts[aid]
            assert acct.first_seen == firsts[aid]
            assert acct.last_seen == lasts[aid]
            assert acct.channels_active == {c for c, _ in acct.message_ids}


def test_dump_load_round_trip(tmp_path, small_synth):
    path = tmp_path / "corpus.jsonl"
    small_synth.corpus.dump_jsonl(path)
    loaded = Corpus.load_jsonl(path)
    assert len(loaded) == len(small_synth.corpus)
    orig = {k: m.to_dict() for k, m in small_synth.corpus.messages.items()}
    back = {k: m.to_dict() for k, m in loaded.messages.items()}
    assert orig == back
