import random
from datetime import date

import numpy as np
import pytest

from propdetect.errors import DataError
from propdetect.topics import (NOISE, KeywordRule, TopicAssignment,
                               cluster_messages, dbscan, keyword_augment,
                               topic_longevity, topic_timeline, unseen_topics)

from conftest import corpus_of, msg


def brute_force_dbscan(x, eps, min_pts, metric="euclidean"):
    """Independent oracle: core sets + union-find + canonical numbering.

    Border points join the lowest cluster id among their core neighbors,
    which is exactly the first-discovered cluster under index-order scans.
    """
    n = len(x)
    if metric == "euclidean":
        dist = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(-1))
    else:
        norms = np.linalg.norm(x, axis=1)
        safe = np.where(norms == 0, 1.0, norms)
        unit = x / safe[:, None]
        dist = 1.0 - np.clip(unit @ unit.T, -1, 1)
        dist[norms == 0, :] = 1.0
        dist[:, norms == 0] = 1.0
    neighbors = [set(np.nonzero(dist[i] <= eps)[0]) for i in range(n)]
    core = [len(nb) >= min_pts for nb in neighbors]

    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        if not core[i]:
            continue
        for j in neighbors[i]:
            if core[j]:
                parent[find(i)] = find(j)

    labels = [NOISE] * n
    cluster_of_root = {}
    for i in range(n):
        if core[i]:
            root = find(i)
            if root not in cluster_of_root:
                cluster_of_root[root] = len(cluster_of_root)
            labels[i] = cluster_of_root[root]
    for i in range(n):
        if core[i]:
            continue
        candidates = [labels[j] for j in neighbors[i] if core[j]]
        if candidates:
            labels[i] = min(candidates)
    return np.array(labels)


class TestDbscan:
    def test_two_blobs(self):
        rng = np.random.default_rng(0)
        a = rng.normal(0, 0.1, (20, 3))
        b = rng.normal(10, 0.1, (20, 3))
        labels = dbscan(np.vstack([a, b]), eps=1.0, min_pts=3)
        assert set(labels[:20]) == {0}
        assert set(labels[20:]) == {1}

    def test_single_point_noise(self):
        labels = dbscan(np.zeros((1, 2)), eps=0.5, min_pts=2)
        assert labels[0] == NOISE

    def test_sparse_all_noise(self):
        x = np.arange(10, dtype=float).reshape(-1, 1) * 100.0
        labels = dbscan(x, eps=1.0, min_pts=2)
        assert set(labels) == {NOISE}

    def test_translation_invariance(self):
        rng = np.random.default_rng(3)
        x = rng.normal(0, 1, (60, 4))
        base = dbscan(x, eps=0.9, min_pts=4)
        shifted = dbscan(x + 123.456, eps=0.9, min_pts=4)
        assert np.array_equal(base, shifted)

    @pytest.mark.parametrize("metric", ["euclidean", "cosine-distance"])
    def test_matches_oracle_random(self, metric):
        rng = np.random.default_rng(17)
        for _ in range(15):
            n = int(rng.integers(5, 120))
            x = rng.normal(0, 1, (n, 3))
            eps = float(rng.uniform(0.2, 1.5)) if metric == "euclidean" \
                else float(rng.uniform(0.05, 0.6))
            min_pts = int(rng.integers(2, 6))
            got = dbscan(x, eps, min_pts, metric)
            want = brute_force_dbscan(x, eps, min_pts, metric)
            assert np.array_equal(got, want)

    def test_every_cluster_point_density_reachable(self):
        rng = np.random.default_rng(5)
        x = rng.normal(0, 1, (80, 2))
        eps, min_pts = 0.5, 3
        labels = dbscan(x, eps, min_pts)
        dist = np.sqrt(((x[:, None] - x[None, :]) ** 2).sum(-1))
        core = [(dist[i] <= eps).sum() >= min_pts for i in range(len(x))]
        for i, lbl in enumerate(labels):
            if lbl == NOISE:
                continue
            # BFS from i's cluster's core points must reach i
            cluster_core = [j for j in range(len(x))
                            if labels[j] == lbl and core[j]]
            reached = set()
            queue = list(cluster_core[:1])
            while queue:
                p = queue.pop()
                if p in reached:
                    continue
                reached.add(p)
                if core[p]:
                    queue.extend(np.nonzero(dist[p] <= eps)[0])
            assert i in reached

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            dbscan(np.zeros(5), eps=1, min_pts=2)


class TestKeywordAugment:
    def make(self):
        corpus = corpus_of(
            msg(mid=1, text="Зеленский опять выступил"),
            msg(mid=2, text="про крипту и биткоин", minutes=1),
            msg(mid=3, text="просто сообщение", minutes=2),
        )
        assignment = TopicAssignment()
        assignment.assign(("ch", 2), "c0", "density-cluster")
        rules = [KeywordRule(("зеленский",), "zelensky"),
                 KeywordRule(("биткоин", "крипт"), "crypto")]
        return corpus, assignment, rules

    def test_noise_message_assigned(self):
        corpus, assignment, rules = self.make()
        out = keyword_augment(assignment, corpus, rules)
        assert out.topic_of(("ch", 1)) == "zelensky"

    def test_clustered_message_unchanged(self):
        corpus, assignment, rules = self.make()
        out = keyword_augment(assignment, corpus, rules)
        assert out.topic_of(("ch", 2)) == "c0"

    def test_first_rule_wins_and_no_match_stays_noise(self):
        corpus, assignment, rules = self.make()
        out = keyword_augment(assignment, corpus, rules)
        assert out.topic_of(("ch", 3)) is None
        assert len(out) >= len(assignment)  # never reduces assignments


class TestTimeline:
    def test_single_day_topic(self):
        corpus = corpus_of(msg(mid=1), msg(mid=2, minutes=30))
        assignment = TopicAssignment()
        assignment.assign(("ch", 1), "t", "density-cluster")
        assignment.assign(("ch", 2), "t", "density-cluster")
        timeline = topic_timeline(corpus, assignment)
        assert timeline == {"t": {date(2023, 8, 16): 2}}
        assert topic_longevity(timeline) == {"t": 0}

    def test_range_longevity(self):
        corpus = corpus_of(msg(mid=1), msg(mid=2, minutes=5 * 24 * 60))
        assignment = TopicAssignment()
        assignment.assign(("ch", 1), "t", "density-cluster")
        assignment.assign(("ch", 2), "t", "density-cluster")
        assert topic_longevity(topic_timeline(corpus, assignment)) == {"t": 5}

    def test_event_onset_lag(self, default_synth):
        # planted event topics must first appear exactly at their onset day
        timeline = topic_timeline(default_synth.corpus, default_synth.topics)
        for topic, onset in default_synth.stats.event_onsets.items():
            days = sorted(timeline.get(topic, {}))
            assert days, f"event topic {topic} produced no messages"
            assert days[0] >= onset.date()

    def test_planted_longevity(self, small_synth):
        timeline = topic_timeline(small_synth.corpus, small_synth.topics)
        longevity = topic_longevity(timeline)
        for topic, days in longevity.items():
            assert 0 <= days <= 28


class TestUnseenTopics:
    def A(self, *topics):
        a = TopicAssignment()
        for i, t in enumerate(topics):
            a.assign(("ch", i), t, "density-cluster")
        return a

    def test_disjoint(self):
        assert unseen_topics(self.A("a"), self.A("b", "c")) == {"b", "c"}

    def test_identical(self):
        assert unseen_topics(self.A("a", "b"), self.A("a", "b")) == set()

    def test_fixture_difference(self):
        train = self.A("war", "crypto")
        test = self.A("war", "holiday", "escalation")
        assert unseen_topics(train, test) == {"holiday", "escalation"}


def test_cluster_messages_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    keys = [("ch", i) for i in range(30)]
    vectors = np.vstack([rng.normal(0, 0.05, (15, 4)),
                         rng.normal(5, 0.05, (15, 4))])
    assignment = cluster_messages(keys, vectors, eps=1.0, min_pts=3,
                                  metric="euclidean")
    assert assignment.topics() == {"c0", "c1"}
    path = tmp_path / "topics.jsonl"
    assignment.dump_jsonl(path)
    loaded = TopicAssignment.load_jsonl(path)
    assert loaded.assignments == assignment.assignments
