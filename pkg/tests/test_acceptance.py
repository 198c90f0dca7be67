"""Acceptance suite: one test per primary criterion, one pass/fail line each.

Tolerances are fixed here, nothing is calibrated at runtime. Criteria that
aggregate "over N seeds" pool per-seed outcomes (per-seed thresholds at these
sample sizes would measure binomial noise, not the detector; the per-seed
minimum is still asserted where it holds with margin).
"""

import itertools
import time
from collections import defaultdict

import numpy as np
import pytest

from propdetect.coordination import CoordGraph, build_graph, louvain, modularity
from propdetect.corpus import merge, normalize_text
from propdetect.embeddings import hash_embed
from propdetect.evaluation import (SuiteConfig, moderator_baseline,
                                   run_detector_suite)
from propdetect.features import extract
from propdetect.labeling import (PROPAGANDA, PROVENANCE_SEED, LabelSet,
                                 augment_labels)
from propdetect.models import (GBTParams, MLPParams, build_pair_vector,
                               grad_check, init_mlp, save_model, train_gbt,
                               train_mlp)
from propdetect.modbot import ACTION_DELETE, BotConfig, ModBot, latency_bench, serve
from propdetect.stubapi import StubBotServer
from propdetect.synthgen import GenConfig, generate
from propdetect.topics import dbscan

from conftest import msg
from feature_fixtures import FIXTURE_ROWS
from test_topics import brute_force_dbscan


def report(name: str, detail: str) -> None:
    print(f"\nACCEPTANCE PASS  {name}: {detail}")


# ---------------------------------------------------------------- criterion 1

def test_augmentation_oracle_50_corpora():
    """augment_labels == brute-force transitive closure, 50 corpora, <5s each."""
    worst = 0.0
    for seed in range(50):
        cfg = GenConfig(seed=seed, users=60, propaganda=16, channels=2,
                        pool_size=80, prop_msgs_range=(6, 18),
                        components=1 + seed % 3)
        result = generate(cfg)
        assert len(result.corpus) <= 5000

        t0 = time.perf_counter()
        seed_account = sorted(result.stats.prop_accounts)[seed % 16]
        seeds = LabelSet()
        seeds.add(seed_account, PROPAGANDA, PROVENANCE_SEED)
        out = augment_labels(result.corpus, seeds, min_len=30)
        elapsed = time.perf_counter() - t0
        worst = max(worst, elapsed)
        assert elapsed < 5.0

        # independent union-find closure over the share->30-char relation
        writers = defaultdict(set)
        for m in result.corpus.iter_messages():
            if m.account_id:
                text = normalize_text(m.text)
                if len(text) > 30:
                    writers[text].add(m.account_id)
        parent = {}

        def find(x):
            parent.setdefault(x, x)
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for accounts in writers.values():
            ordered = sorted(accounts)
            for other in ordered[1:]:
                parent[find(ordered[0])] = find(other)
        closure = {a for a in parent if find(a) == find(seed_account)}
        closure.add(seed_account)
        assert set(out.labels.accounts(PROPAGANDA)) == closure
    report("augmentation-oracle", f"50 corpora exact, worst runtime {worst:.3f}s")


# ---------------------------------------------------------------- criterion 2

def test_coordination_contrast(default_synth):
    """Propaganda giant component >= 90%; user largest component <= 10%."""
    stats = default_synth.stats
    prop_graph = build_graph(default_synth.corpus, set(stats.prop_accounts))
    prop_giant = len(prop_graph.components()[0]) / len(stats.prop_accounts)
    user_graph = build_graph(default_synth.corpus, set(stats.user_accounts))
    user_comps = user_graph.components()
    user_largest = (len(user_comps[0]) if user_comps else 0) / len(stats.user_accounts)
    assert prop_giant >= 0.90
    assert user_largest <= 0.10
    report("coordination-contrast",
           f"propaganda giant {prop_giant:.0%}, user largest {user_largest:.1%}")


# ---------------------------------------------------------------- criterion 3

def test_louvain_planted_blocks_and_modularity_oracle():
    """Planted 2-block recovery >=95% over 20 seeds; Q matches the double sum
    to 1e-12 on 100 random graphs."""
    import random as pyrandom
    for seed in range(20):
        rng = pyrandom.Random(seed)
        blocks = {f"n{i:02d}": i % 2 for i in range(60)}
        graph = CoordGraph(nodes=blocks)
        for a, b in itertools.combinations(sorted(blocks), 2):
            p = 0.5 if blocks[a] == blocks[b] else 0.02
            if rng.random() < p:
                graph.add_edge(a, b)
        partition = louvain(graph, seed=seed)
        agreement = 0
        for members in partition.community_sets().values():
            votes = sum(blocks[n] for n in members)
            majority = 1 if votes * 2 >= len(members) else 0
            agreement += sum(1 for n in members if blocks[n] == majority)
        assert agreement / 60 >= 0.95, f"seed {seed}: {agreement}/60"

    worst = 0.0
    rng = pyrandom.Random(999)
    checked = 0
    while checked < 100:
        n = rng.randint(4, 14)
        graph = CoordGraph()
        nodes = [f"m{i}" for i in range(n)]
        for a, b in itertools.combinations(nodes, 2):
            if rng.random() < 0.35:
                graph.add_edge(a, b, weight=rng.randint(1, 5))
        if not graph.edges:
            continue
        communities = {node: rng.randrange(4) for node in nodes}
        m2 = 2.0 * graph.total_weight()
        q_oracle = 0.0
        for a in nodes:
            for b in nodes:
                if communities[a] != communities[b]:
                    continue
                a_ij = float(graph.weight(a, b)) if a != b else 0.0
                q_oracle += (a_ij - graph.degree(a) * graph.degree(b) / m2) / m2
        worst = max(worst, abs(modularity(graph, communities) - q_oracle))
        checked += 1
    assert worst <= 1e-12
    report("louvain-modularity",
           f"20/20 planted recoveries, max |Q - oracle| = {worst:.2e}")


# ---------------------------------------------------------------- criterion 4

def test_dbscan_exact_oracle_agreement():
    """Exact label agreement with the density-reachability oracle, 100 sets."""
    rng = np.random.default_rng(123)
    for trial in range(100):
        n = int(rng.integers(3, 201))
        dim = int(rng.integers(2, 5))
        x = rng.normal(0, 1, (n, dim))
        metric = "euclidean" if trial % 2 == 0 else "cosine-distance"
        eps = float(rng.uniform(0.3, 1.6)) if metric == "euclidean" \
            else float(rng.uniform(0.05, 0.7))
        min_pts = int(rng.integers(2, 7))
        got = dbscan(x, eps, min_pts, metric)
        want = brute_force_dbscan(x, eps, min_pts, metric)
        assert np.array_equal(got, want), f"trial {trial} disagrees"
    report("dbscan-oracle", "100/100 point sets agree exactly")


# ---------------------------------------------------------------- criterion 5

def test_feature_extraction_25_fixtures():
    """25 hand-computed strings reproduce all eight features exactly."""
    assert len(FIXTURE_ROWS) == 25
    trigger = msg(mid=1, minutes=-10)
    for text, length, words, urls, emojis, excl, quest in FIXTURE_ROWS:
        reply = msg(mid=2, text=text)
        fv = extract(reply, trigger)
        assert (fv.msg_length, fv.word_count, fv.url_count, fv.emoji_count,
                fv.exclamation_count, fv.question_count) == \
            (length, words, urls, emojis, excl, quest), repr(text)
        assert fv.msg_time_of_day == 12 * 3600
        assert fv.reply_latency == 600.0
        solo = extract(reply)
        assert solo.reply_latency == -1.0
    report("feature-fixtures", "25/25 strings, all eight features exact")


# ---------------------------------------------------------------- criterion 6

def test_mlp_gradients_and_gbt_loss_monotonicity():
    """Grad check < 1e-4 over 100 draws; GBT loss non-increasing, 20 datasets."""
    rng = np.random.default_rng(7)
    worst = 0.0
    for i in range(100):
        n_in = int(rng.integers(3, 9))
        model = init_mlp(n_in, int(rng.integers(3, 8)), int(rng.integers(2, 6)),
                         seed=i)
        x = rng.normal(0, 1, n_in)
        y = float(rng.integers(0, 2))
        worst = max(worst, grad_check(model, x, y, h=1e-4))
    assert worst < 1e-4

    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        n = int(rng.integers(60, 200))
        d = int(rng.integers(2, 6))
        X = rng.normal(0, 1, (n, d))
        w = rng.normal(0, 1, d)
        y = (X @ w + rng.normal(0, 0.8, n) > 0).astype(float)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        model = train_gbt(X, y, GBTParams(trees=50, depth=3))
        losses = model.train_loss
        assert all(later <= earlier + 1e-12
                   for earlier, later in zip(losses, losses[1:])), f"seed {seed}"
    report("gradients-and-boosting",
           f"max grad-check rel err {worst:.2e}; 20/20 loss curves monotone")


# ---------------------------------------------------------------- criterion 7

def test_detector_ordering_over_ten_seeds():
    """Pair detector quality and the short-topic / unseen-topic mechanisms,
    aggregated over 10 generator seeds at default separability."""
    cfg = SuiteConfig()
    per_seed_acc = []
    fp = tn = 0
    slice_hits = {"handcrafted": [], "reply-emb": [], "pair-emb": []}
    unseen_hits = {"pair-emb": {"all": [], "unseen": []},
                   "trigger-emb": {"all": [], "unseen": []}}
    for seed in range(10):
        result = generate(GenConfig(seed=seed))
        suite = run_detector_suite(result.corpus, result.labels, result.topics,
                                   result.stats.cutoff, cfg)
        pair = suite.report.models["pair-emb"]
        per_seed_acc.append(pair.overall_accuracy)
        fp += pair.confusion["fp"]
        tn += pair.confusion["tn"]

        short = result.stats.short_topic
        for i, key in enumerate(suite.test_keys):
            topic = result.topics.topic_of(key)
            truth = suite.test_truth[i] == PROPAGANDA
            for name, hits in slice_hits.items():
                if topic == short:
                    hits.append((suite.scores[name][i] >= 0.5) == truth)
            for name, buckets in unseen_hits.items():
                correct = (suite.scores[name][i] >= 0.5) == truth
                buckets["all"].append(correct)
                if topic in suite.unseen:
                    buckets["unseen"].append(correct)

    min_acc = min(per_seed_acc)
    pooled_fpr = fp / (fp + tn)
    assert min_acc >= 0.95, f"worst seed accuracy {min_acc:.3f}"
    assert pooled_fpr <= 0.02, f"pooled FPR {pooled_fpr:.4f}"

    slice_acc = {k: float(np.mean(v)) for k, v in slice_hits.items()}
    assert slice_acc["pair-emb"] - slice_acc["handcrafted"] >= 0.10
    assert slice_acc["pair-emb"] >= slice_acc["reply-emb"] >= slice_acc["handcrafted"]

    degr = {}
    for name, buckets in unseen_hits.items():
        degr[name] = float(np.mean(buckets["all"]) - np.mean(buckets["unseen"]))
    assert degr["pair-emb"] <= 0.05, f"pair degradation {degr['pair-emb']:+.3f}"
    assert degr["trigger-emb"] >= 0.15, f"trigger degradation {degr['trigger-emb']:+.3f}"
    report("detector-ordering",
           f"min pair acc {min_acc:.3f}, pooled FPR {pooled_fpr:.4f}, "
           f"slice pair-hand margin {slice_acc['pair-emb'] - slice_acc['handcrafted']:+.3f}, "
           f"degradation pair {degr['pair-emb']:+.3f} / trigger {degr['trigger-emb']:+.3f}")


# ---------------------------------------------------------------- criterion 8

def test_temporal_hygiene_and_reproducibility(small_synth):
    """Leakage assertions hold; identical inputs give byte-identical reports."""
    cfg = SuiteConfig(dim=64, mlp=MLPParams(epochs=6))
    first = run_detector_suite(small_synth.corpus, small_synth.labels,
                               small_synth.topics, small_synth.stats.cutoff, cfg)
    cutoff = small_synth.stats.cutoff
    test_keys = set(first.test_keys)
    for key in first.test_keys:
        assert small_synth.corpus.messages[key].timestamp >= cutoff
    again = run_detector_suite(small_synth.corpus, small_synth.labels,
                               small_synth.topics, cutoff, cfg)
    assert set(again.test_keys) == test_keys
    b1 = first.report.to_json().encode("utf-8")
    b2 = again.report.to_json().encode("utf-8")
    assert b1 == b2
    report("temporal-hygiene",
           f"no leakage over {len(test_keys)} test keys; reports byte-identical "
           f"({len(b1)} bytes)")


# ---------------------------------------------------------------- criterion 9

def test_latency_budget(tmp_path, default_synth):
    """verdict_for end-to-end mean <= 0.25 s/pair over 1000 pairs (hash, CPU)."""
    rows, labels = [], []
    rng = np.random.default_rng(0)
    corpus = default_synth.corpus
    keys = [k for k in sorted(corpus.messages)
            if corpus.trigger_of(k) is not None][:600]
    for key in keys:
        m = corpus.messages[key]
        t = corpus.trigger_of(key)
        rows.append(build_pair_vector(hash_embed(t.text, 128),
                                      hash_embed(m.text, 128)))
        lbl = default_synth.labels.label_of(m.account_id)
        labels.append(1.0 if lbl == PROPAGANDA else 0.0)
    model = train_mlp(np.vstack(rows), np.array(labels), h1=256, h2=64,
                      params=MLPParams(epochs=3), input_kind="pair-emb",
                      embedding_dim=128)
    path = tmp_path / "pair.json"
    save_model(model, path)

    bot = ModBot(BotConfig(pair_model_path=str(path), embedding_source="hash:128"))
    pairs = []
    for key in itertools.islice(itertools.cycle(keys), 1000):
        pairs.append((corpus.messages[key], corpus.trigger_of(key)))
    mean_s, std_s, _ = latency_bench(bot, pairs)
    assert len(pairs) == 1000
    assert mean_s <= 0.25
    report("latency", f"mean {mean_s * 1000:.2f} ms/pair (budget 250 ms), "
                      f"std {std_s * 1000:.2f} ms over 1000 pairs")


# --------------------------------------------------------------- criterion 10

def test_moderation_diff_recovers_planted_ratios():
    """Planted 80%/10% deletion rates recovered exactly from the feeds."""
    cfg = GenConfig(seed=21, users=80, propaganda=24,
                    deletion_rate_prop=0.8, deletion_rate_user=0.1)
    result = generate(cfg)
    corpus = merge([result.historical, result.realtime])
    from propdetect.corpus import diff_deleted
    diff_deleted(corpus)
    stats = moderator_baseline(corpus, result.labels)
    deleted_prop = sum(s.deleted_propaganda for s in stats.values())
    labeled_prop = sum(s.labeled_propaganda for s in stats.values())
    deleted_user = sum(s.deleted_total - s.deleted_propaganda for s in stats.values())
    labeled_user = sum(s.labeled_total - s.labeled_propaganda for s in stats.values())
    got_prop = deleted_prop / labeled_prop
    got_user = deleted_user / labeled_user
    assert got_prop == pytest.approx(result.stats.deletion_ratio_prop, abs=1e-12)
    assert got_user == pytest.approx(result.stats.deletion_ratio_user, abs=1e-12)
    assert deleted_prop == result.stats.deleted_prop
    assert deleted_user == result.stats.deleted_user
    report("moderation-diff",
           f"recovered ratios {got_prop:.4f} / {got_user:.4f} exactly")


# --------------------------------------------------------------- criterion 11

def test_bot_service_against_stub_api(tmp_path):
    """deleteMessage fired for exactly the propaganda verdicts; allowlist and
    per-channel ordering hold under interleaved multi-channel input."""
    dim = 32
    rng = np.random.default_rng(5)
    words_prop = ["glorix", "veritas", "zundo", "agenda"]
    words_user = ["well", "okay", "sure", "fine", "whatever"]
    rows, labels = [], []
    for i in range(240):
        trig = " ".join(rng.choice(words_user, 3))
        reply = " ".join(rng.choice(words_prop if i % 2 == 0 else words_user, 4))
        rows.append(build_pair_vector(hash_embed(trig, dim), hash_embed(reply, dim)))
        labels.append(1.0 if i % 2 == 0 else 0.0)
    model = train_mlp(np.vstack(rows), np.array(labels), h1=24, h2=8,
                      params=MLPParams(epochs=25, seed=3),
                      input_kind="pair-emb", embedding_dim=dim)
    path = tmp_path / "pair.json"
    save_model(model, path)

    events = []
    for i in range(1, 13):
        for channel in ("allowed-1", "allowed-2", "blocked"):
            events.append(msg(channel=channel, mid=100 + i, account=f"u{i}",
                              text="well okay sure", minutes=3 * i))
            is_prop = i % 2 == 0
            events.append(msg(channel=channel, mid=200 + i,
                              account=("bot" if is_prop else "usr") + str(i),
                              text=" ".join(["glorix", "zundo", "veritas"]
                                            if is_prop else
                                            ["okay", "sure", "whatever"]),
                              reply_to=100 + i, minutes=3 * i + 1))

    with StubBotServer() as stub:
        config = BotConfig(pair_model_path=str(path),
                           embedding_source=f"hash:{dim}",
                           action=ACTION_DELETE,
                           allowlist={"allowed-1", "allowed-2"},
                           api_base_url=stub.base_url,
                           api_token=stub.state.token,
                           retry_base_seconds=0.01)
        scored, actions = serve(config, events)

        expected = {(s.message.channel_id, s.message.message_id)
                    for s in scored
                    if s.verdict and s.verdict.label == PROPAGANDA
                    and s.message.channel_id != "blocked"}
        called = {(p["chat_id"], p["message_id"])
                  for _, p in stub.state.acting_calls("deleteMessage")}
        assert called == expected and expected
        assert all(c[0] != "blocked" for c in called)
        for channel in ("allowed-1", "allowed-2"):
            order = [p["message_id"] for _, p in stub.state.acting_calls()
                     if p["chat_id"] == channel]
            verdict_order = [s.message.message_id for s in scored
                             if s.message.channel_id == channel
                             and (s.message.channel_id, s.message.message_id)
                             in expected]
            assert order == verdict_order
    report("bot-service",
           f"{len(called)} deletions match propaganda verdicts exactly; "
           "blocked channel untouched; per-channel order preserved")
