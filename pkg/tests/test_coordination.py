import itertools
import math
import random

import pytest

from propdetect.coordination import (CoordGraph, account_stats, build_graph,
                                     effectiveness, louvain, modularity,
                                     wordshift)
from propdetect.corpus import normalize_text
from propdetect.errors import DataError

from conftest import corpus_of, msg


class TestBuildGraph:
    def test_shared_long_text_makes_edge(self):
        corpus = corpus_of(
            msg(mid=1, account="a", text="hello world!"),
            msg(mid=2, account="b", text="hello world!", minutes=1),
        )
        graph = build_graph(corpus, {"a", "b"})
        assert graph.weight("a", "b") == 1

    def test_trivial_text_excluded(self):
        corpus = corpus_of(msg(mid=1, account="a", text="yes"),
                           msg(mid=2, account="b", text="yes", minutes=1))
        graph = build_graph(corpus, {"a", "b"})
        assert len(graph.edges) == 0

    def test_weight_counts_distinct_texts(self):
        corpus = corpus_of(
            msg(mid=1, account="a", text="first shared text"),
            msg(mid=2, account="b", text="first shared text", minutes=1),
            msg(mid=3, account="a", text="second shared text", minutes=2),
            msg(mid=4, account="b", text="second shared text", minutes=3),
            msg(mid=5, account="a", text="first shared text", minutes=4),
        )
        graph = build_graph(corpus, {"a", "b"})
        assert graph.weight("a", "b") == 2

    def test_matches_pairwise_oracle(self):
        rng = random.Random(3)
        texts = [f"text number {i} with padding yep" for i in range(8)]
        messages, mid = [], 0
        for a in range(12):
            for t in rng.sample(texts, rng.randint(0, 3)):
                messages.append(msg(mid=mid, account=f"a{a:02d}", text=t, minutes=mid))
                mid += 1
        from propdetect.corpus import merge
        corpus = merge([messages])
        cohort = {f"a{a:02d}" for a in range(12)}
        graph = build_graph(corpus, cohort)

        texts_of = {a: set() for a in cohort}
        for m in corpus.iter_messages():
            t = normalize_text(m.text)
            if len(t) > 10:
                texts_of[m.account_id].add(t)
        for a, b in itertools.combinations(sorted(cohort), 2):
            shared = len(texts_of[a] & texts_of[b])
            assert graph.weight(a, b) == shared

    def test_empty_cohort_error(self):
        with pytest.raises(DataError):
            build_graph(corpus_of(msg(mid=1)), set())

    def test_isomorphism_under_relabeling(self):
        base = corpus_of(
            msg(mid=1, account="a", text="shared text alpha"),
            msg(mid=2, account="b", text="shared text alpha", minutes=1),
            msg(mid=3, account="c", text="shared text beta!", minutes=2),
            msg(mid=4, account="a", text="shared text beta!", minutes=3),
        )
        rename = {"a": "zz", "b": "xx", "c": "yy"}
        renamed = corpus_of(*[
            msg(mid=m.message_id, account=rename[m.account_id], text=m.text,
                minutes=m.message_id) for m in base.iter_messages()
        ])
        g1 = build_graph(base, set(rename))
        g2 = build_graph(renamed, set(rename.values()))
        mapped = {tuple(sorted((rename[a], rename[b]))): w
                  for (a, b), w in g1.edges.items()}
        assert mapped == g2.edges


def two_cliques() -> CoordGraph:
    graph = CoordGraph()
    for group in (list("abcd"), list("efgh")):
        for x, y in itertools.combinations(group, 2):
            graph.add_edge(x, y)
    return graph


def set_partitions(items):
    """All partitions of a small set (Bell-number enumeration)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in set_partitions(rest):
        for i in range(len(partition)):
            yield partition[:i] + [[first] + partition[i]] + partition[i + 1:]
        yield [[first]] + partition


class TestModularity:
    def test_two_cliques_half(self):
        graph = two_cliques()
        communities = {n: 0 for n in "abcd"} | {n: 1 for n in "efgh"}
        assert modularity(graph, communities) == pytest.approx(0.5)

    def test_k2_all_in_one_zero(self):
        graph = CoordGraph()
        graph.add_edge("a", "b")
        assert modularity(graph, {"a": 0, "b": 0}) == pytest.approx(0.0)

    def test_singleton_partition_identity(self):
        rng = random.Random(1)
        graph = CoordGraph()
        nodes = [f"n{i}" for i in range(10)]
        for a, b in itertools.combinations(nodes, 2):
            if rng.random() < 0.3:
                graph.add_edge(a, b, weight=rng.randint(1, 3))
        singleton = {n: i for i, n in enumerate(sorted(graph.nodes))}
        m2 = 2.0 * graph.total_weight()
        expected = -sum((graph.degree(n) / m2) ** 2 for n in graph.nodes)
        assert modularity(graph, singleton) == pytest.approx(expected, abs=1e-12)

    def test_all_in_one_zero(self):
        graph = two_cliques()
        assert modularity(graph, {n: 0 for n in graph.nodes}) == pytest.approx(0.0)

    def test_matches_double_sum_oracle(self):
        rng = random.Random(9)
        for _ in range(25):
            graph = CoordGraph()
            nodes = [f"n{i}" for i in range(rng.randint(4, 12))]
            for a, b in itertools.combinations(nodes, 2):
                if rng.random() < 0.4:
                    graph.add_edge(a, b, weight=rng.randint(1, 4))
            if not graph.edges:
                continue
            communities = {n: rng.randrange(3) for n in graph.nodes}
            # definitional double sum over ordered pairs
            m2 = 2.0 * graph.total_weight()
            q = 0.0
            for a in graph.nodes:
                for b in graph.nodes:
                    if communities[a] != communities[b]:
                        continue
                    a_ij = float(graph.weight(a, b)) if a != b else 0.0
                    q += (a_ij - graph.degree(a) * graph.degree(b) / m2) / m2
            assert modularity(graph, communities) == pytest.approx(q, abs=1e-12)


class TestLouvain:
    def test_two_cliques_recovered_and_optimal(self):
        graph = two_cliques()
        partition = louvain(graph, seed=1)
        groups = partition.community_sets()
        assert sorted(frozenset(g) for g in groups.values()) == \
               sorted([frozenset("abcd"), frozenset("efgh")])
        assert partition.modularity == pytest.approx(0.5)
        # exhaustive search over all partitions of the 8 nodes confirms 0.5
        # is the global optimum
        best = max(
            modularity(graph, {n: i for i, block in enumerate(p) for n in block})
            for p in set_partitions(sorted(graph.nodes))
        )
        assert best == pytest.approx(0.5)

    def test_k2_single_community(self):
        graph = CoordGraph()
        graph.add_edge("a", "b")
        partition = louvain(graph, seed=0)
        assert partition.communities["a"] == partition.communities["b"]
        assert partition.modularity == pytest.approx(0.0)

    def test_planted_two_blocks(self):
        rng = random.Random(4)
        graph = CoordGraph()
        blocks = {f"n{i:02d}": i % 2 for i in range(60)}
        nodes = sorted(blocks)
        for a, b in itertools.combinations(nodes, 2):
            p = 0.5 if blocks[a] == blocks[b] else 0.02
            if rng.random() < p:
                graph.add_edge(a, b)
        partition = louvain(graph, seed=7)
        # map communities to planted blocks by majority
        agreement = 0
        for comm, members in partition.community_sets().items():
            votes = sum(blocks[n] for n in members)
            majority = 1 if votes * 2 >= len(members) else 0
            agreement += sum(1 for n in members if blocks[n] == majority)
        assert agreement / len(nodes) >= 0.95

    def test_deterministic_under_seed(self):
        graph = two_cliques()
        graph.add_edge("a", "e")
        p1 = louvain(graph, seed=5)
        p2 = louvain(graph, seed=5)
        assert p1.communities == p2.communities

    def test_never_below_singleton(self):
        rng = random.Random(12)
        for trial in range(10):
            graph = CoordGraph()
            nodes = [f"n{i}" for i in range(12)]
            for a, b in itertools.combinations(nodes, 2):
                if rng.random() < 0.25:
                    graph.add_edge(a, b, weight=rng.randint(1, 3))
            if not graph.edges:
                continue
            partition = louvain(graph, seed=trial)
            singleton = {n: i for i, n in enumerate(sorted(graph.nodes))}
            assert partition.modularity >= modularity(graph, singleton) - 1e-12


class TestAccountStats:
    def test_single_message_zero_lifespan(self):
        stats = account_stats(corpus_of(msg(mid=1, account="a")), {"a"})
        assert stats[0].lifespan_hours == 0.0

    def test_24h_lifespan(self):
        corpus = corpus_of(msg(mid=1, account="a"),
                           msg(mid=2, account="a", minutes=24 * 60))
        assert account_stats(corpus, {"a"})[0].lifespan_hours == pytest.approx(24.0)

    def test_matches_naive_scan(self, small_synth):
        cohort = set(small_synth.stats.prop_accounts)
        stats = {s.account_id: s for s in account_stats(small_synth.corpus, cohort)}
        for aid in cohort:
            msgs = [m for m in small_synth.corpus.iter_messages()
                    if m.account_id == aid]
            assert stats[aid].message_count == len(msgs)
            assert stats[aid].channel_count == len({m.channel_id for m in msgs})
            span = (max(m.timestamp for m in msgs)
                    - min(m.timestamp for m in msgs)).total_seconds() / 3600
            assert stats[aid].lifespan_hours == pytest.approx(span)
            mean_len = sum(len(m.text) for m in msgs) / len(msgs)
            assert stats[aid].mean_message_length == pytest.approx(mean_len)


class TestEffectiveness:
    def test_three_replies(self):
        corpus = corpus_of(
            msg(mid=1, account="p"),
            msg(mid=2, account="u1", reply_to=1, minutes=1),
            msg(mid=3, account="u2", reply_to=1, minutes=2),
            msg(mid=4, account="u3", reply_to=1, minutes=3),
        )
        assert effectiveness(corpus, {"p"}).mean == pytest.approx(3.0)

    def test_no_replies(self):
        corpus = corpus_of(msg(mid=1, account="p"))
        assert effectiveness(corpus, {"p"}).mean == 0.0

    def test_union_is_weighted_mean(self, small_synth):
        corpus = small_synth.corpus
        a = set(small_synth.stats.prop_accounts)
        b = set(small_synth.stats.user_accounts)
        ea, eb = effectiveness(corpus, a), effectiveness(corpus, b)
        eu = effectiveness(corpus, a | b)
        weighted = (ea.mean * ea.message_count + eb.mean * eb.message_count) \
            / (ea.message_count + eb.message_count)
        assert eu.mean == pytest.approx(weighted, abs=1e-12)

    def test_planted_mean_recovered(self, default_synth):
        stats = default_synth.stats
        got = effectiveness(default_synth.corpus, set(stats.prop_accounts))
        assert got.mean == pytest.approx(stats.effectiveness_prop, abs=0.01)

    def test_empty_cohort_error(self):
        with pytest.raises(DataError):
            effectiveness(corpus_of(msg(mid=1, account="a")), {"ghost"})


class TestWordshift:
    def test_simple_dominance(self):
        a_side, b_side = wordshift(["да да"], ["нет"])
        assert a_side[0].stem == "да"
        assert b_side[0].stem == "нет"

    def test_identical_corpora_all_zero(self):
        texts = ["war and peace", "war again"]
        a_side, b_side = wordshift(texts, list(texts))
        assert a_side == [] and b_side == []

    def test_hand_computed_frequencies(self):
        # A: tokens war,war,peace -> war 2/3, peace 1/3
        # B: tokens war,love,love,love -> war 1/4, love 3/4
        a_side, b_side = wordshift(["war war peace"], ["war love love love"])
        by_stem = {e.stem: e for e in a_side + b_side}
        assert by_stem["war"].score == pytest.approx(2 / 3 - 1 / 4)
        assert by_stem["peac"].score == pytest.approx(1 / 3)
        assert by_stem["love"].score == pytest.approx(-3 / 4)

    def test_stemming_merges_inflections(self):
        a_side, _ = wordshift(["connected connection connecting"], ["quiet"])
        assert a_side[0].stem == "connect"
        assert a_side[0].freq_a == pytest.approx(1.0)

    def test_empty_side_error(self):
        with pytest.raises(DataError):
            wordshift([], ["text"])
