import numpy as np
import pytest

from propdetect.errors import DataError
from propdetect.features import (FEATURE_NAMES, NO_TRIGGER_LATENCY,
                                 batch_extract, dump_features_csv, extract,
                                 feature_schema_hash)

from conftest import msg
from feature_fixtures import FIXTURE_ROWS


class TestExtract:
    def test_empty_message_no_trigger(self):
        fv = extract(msg(text="", minutes=0))
        assert (fv.msg_length, fv.word_count, fv.url_count, fv.emoji_count,
                fv.exclamation_count, fv.question_count) == (0, 0, 0, 0, 0, 0)
        assert fv.reply_latency == NO_TRIGGER_LATENCY
        # conftest T0 is 12:00:00 UTC
        assert fv.msg_time_of_day == 12 * 3600

    @pytest.mark.parametrize(
        "text,length,words,urls,emojis,excl,quest", FIXTURE_ROWS)
    def test_hand_computed_fixtures(self, text, length, words, urls, emojis,
                                    excl, quest):
        fv = extract(msg(text=text))
        assert fv.msg_length == length
        assert fv.word_count == words
        assert fv.url_count == urls
        assert fv.emoji_count == emojis
        assert fv.exclamation_count == excl
        assert fv.question_count == quest

    def test_latency_90_seconds(self):
        trigger = msg(mid=1, minutes=0)
        reply = msg(mid=2, seconds=90)
        assert extract(reply, trigger).reply_latency == 90.0

    def test_trigger_after_message_is_error(self):
        trigger = msg(mid=1, minutes=5)
        reply = msg(mid=2, minutes=0)
        with pytest.raises(DataError):
            extract(reply, trigger)

    def test_time_of_day_bounds(self):
        fv = extract(msg(text="x", minutes=-720))  # midnight UTC
        assert fv.msg_time_of_day == 0.0
        fv = extract(msg(text="x", minutes=719, seconds=59))  # 23:59:59
        assert fv.msg_time_of_day == 86399.0

    def test_epoch_mode(self):
        m = msg(text="x")
        fv = extract(m, time_mode="epoch")
        assert fv.msg_time_of_day == m.timestamp.timestamp()

    def test_purity(self):
        m, t = msg(mid=2, text="hi!", seconds=60), msg(mid=1)
        assert extract(m, t) == extract(m, t)


class TestBatchExtract:
    def test_row_count_and_order(self):
        pairs = [(msg(mid=i, text="x" * i, seconds=10 * i), None) for i in range(5)]
        matrix, schema = batch_extract(pairs)
        assert matrix.shape == (5, 8)
        assert schema["names"] == list(FEATURE_NAMES)
        for row, (m, t) in zip(matrix, pairs):
            assert np.array_equal(row, extract(m, t).as_array())

    def test_empty_input(self):
        matrix, schema = batch_extract([])
        assert matrix.shape == (0, 8)
        assert schema["hash"] == feature_schema_hash()

    def test_permutation_permutes_rows(self):
        pairs = [(msg(mid=i, text=f"text {i}!", seconds=i), None) for i in range(6)]
        matrix, _ = batch_extract(pairs)
        perm = [3, 1, 5, 0, 2, 4]
        permuted, _ = batch_extract([pairs[i] for i in perm])
        assert np.array_equal(permuted, matrix[perm])


def test_csv_dump_header(tmp_path):
    pairs = [(msg(text="hi there"), None)]
    matrix, _ = batch_extract(pairs)
    out = tmp_path / "features.csv"
    dump_features_csv(matrix, out)
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(FEATURE_NAMES)
    assert len(lines) == 2
