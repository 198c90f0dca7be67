"""Coordination analysis: shared-text graphs, Louvain communities, cohort stats.

Accounts that post identical long texts are linked; coordinated cohorts form
one large connected component while organic users stay fragmented.
"""

from __future__ import annotations

import random
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .corpus import Corpus, normalize_text
from .errors import DataError
from .stemming import stem

EDGE_SAMPLE_LIMIT = 3


class CoordGraph:
    """Undirected weighted graph over account ids.

    Edge weight = number of distinct shared texts; a few sample texts are kept
    per edge. No self-loops.
    """

    def __init__(self, nodes=()):
        self.nodes: set[str] = set(nodes)
        self.edges: dict[tuple[str, str], int] = {}
        self.samples: dict[tuple[str, str], list[str]] = {}
        self._adj: dict[str, dict[str, int]] = defaultdict(dict)

    @staticmethod
    def _key(a: str, b: str) -> tuple[str, str]:
        return (a, b) if a <= b else (b, a)

    def add_edge(self, a: str, b: str, weight: int = 1, sample: str | None = None) -> None:
        if a == b:
            raise DataError("self-loops are not allowed")
        self.nodes.add(a)
        self.nodes.add(b)
        key = self._key(a, b)
        self.edges[key] = self.edges.get(key, 0) + weight
        self._adj[a][b] = self.edges[key]
        self._adj[b][a] = self.edges[key]
        if sample is not None:
            bucket = self.samples.setdefault(key, [])
            if len(bucket) < EDGE_SAMPLE_LIMIT:
                bucket.append(sample)

    def weight(self, a: str, b: str) -> int:
        return self.edges.get(self._key(a, b), 0)

    def neighbors(self, node: str) -> dict[str, int]:
        return self._adj.get(node, {})

    def degree(self, node: str) -> float:
        return float(sum(self._adj.get(node, {}).values()))

    def total_weight(self) -> float:
        return float(sum(self.edges.values()))

    def __len__(self) -> int:
        return len(self.nodes)

    def components(self) -> list[set[str]]:
        """Connected components, largest first (ties by smallest member)."""
        seen: set[str] = set()
        comps: list[set[str]] = []
        for start in sorted(self.nodes):
            if start in seen:
                continue
            comp = {start}
            queue = [start]
            while queue:
                node = queue.pop()
                for nb in self._adj.get(node, {}):
                    if nb not in comp:
                        comp.add(nb)
                        queue.append(nb)
            seen |= comp
            comps.append(comp)
        return sorted(comps, key=lambda c: (-len(c), min(c)))

    def dump_edges(self, path) -> None:
        """Edge list: a<TAB>b<TAB>weight, sorted."""
        with open(path, "w", encoding="utf-8") as fh:
            for (a, b), w in sorted(self.edges.items()):
                fh.write(f"{a}\t{b}\t{w}\n")

    @classmethod
    def load_edges(cls, path) -> "CoordGraph":
        graph = cls()
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                a, b, w = line.split("\t")
                graph.add_edge(a, b, int(w))
        return graph


def build_graph(corpus: Corpus, cohort: set[str], min_len: int = 10) -> CoordGraph:
    """Link cohort accounts that share at least one exact text longer than
    ``min_len`` characters (excludes trivial messages like "yes")."""
    if not cohort:
        raise DataError("cohort is empty")
    writers: defaultdict[str, set[str]] = defaultdict(set)
    for msg in corpus.iter_messages():
        if msg.account_id not in cohort:
            continue
        text = normalize_text(msg.text)
        if len(text) > min_len:
            writers[text].add(msg.account_id)

    graph = CoordGraph(nodes=cohort)
    for text in sorted(writers):
        accounts = sorted(writers[text])
        for i, a in enumerate(accounts):
            for b in accounts[i + 1:]:
                graph.add_edge(a, b, 1, sample=text)
    return graph


@dataclass
class Partition:
    communities: dict[str, int]
    modularity: float

    def community_sets(self) -> dict[int, set[str]]:
        out: defaultdict[int, set[str]] = defaultdict(set)
        for node, comm in self.communities.items():
            out[comm].add(node)
        return dict(out)

    def dump_jsonl(self, path) -> None:
        import json
        with open(path, "w", encoding="utf-8") as fh:
            for node in sorted(self.communities):
                fh.write(json.dumps({"account_id": node,
                                     "community": self.communities[node]},
                                    ensure_ascii=False, sort_keys=True))
                fh.write("\n")


def modularity(graph: CoordGraph, communities: dict[str, int]) -> float:
    """Weighted Newman modularity: Q = sum_c [in_c/(2m) - (tot_c/(2m))^2]."""
    m2 = 2.0 * graph.total_weight()
    if m2 == 0:
        raise DataError("graph has no edges")
    inside: Counter = Counter()
    total: Counter = Counter()
    for (a, b), w in graph.edges.items():
        ca, cb = communities[a], communities[b]
        if ca == cb:
            inside[ca] += 2.0 * w
        total[ca] += w
        total[cb] += w
    comms = set(communities.values())
    return sum((inside[c] / m2) - (total[c] / m2) ** 2 for c in comms)


def louvain(graph: CoordGraph, seed: int = 0) -> Partition:
    """Louvain community detection: greedy local moves plus aggregation.

    Deterministic for a fixed seed: sweep order is the sorted node list
    shuffled by a seeded RNG, and equal-gain ties go to the lowest community
    id. Isolated nodes stay in singleton communities.
    """
    if not graph.nodes:
        raise DataError("graph is empty")

    nodes = sorted(graph.nodes)
    index = {n: i for i, n in enumerate(nodes)}
    adj: list[dict[int, float]] = [
        {index[nb]: float(w) for nb, w in graph.neighbors(n).items()} for n in nodes
    ]
    self_loops = [0.0] * len(nodes)
    assignment = {n: i for i, n in enumerate(nodes)}  # original node -> super-node
    rng = random.Random(seed)

    while True:
        n = len(adj)
        degree = [sum(a.values()) + 2.0 * self_loops[i] for i, a in enumerate(adj)]
        m2 = sum(degree)
        if m2 == 0:
            break
        comm_tot = degree[:]
        comm = list(range(n))

        order = list(range(n))
        rng.shuffle(order)
        improved_any = False
        while True:
            moved = False
            for node in order:
                current = comm[node]
                k_i = degree[node]
                comm_tot[current] -= k_i
                weights_to: dict[int, float] = defaultdict(float)
                for nb, w in adj[node].items():
                    weights_to[comm[nb]] += w
                best_comm, best_gain = current, weights_to.get(current, 0.0) - comm_tot[current] * k_i / m2
                for cand in sorted(weights_to):
                    gain = weights_to[cand] - comm_tot[cand] * k_i / m2
                    if gain > best_gain + 1e-12 or (abs(gain - best_gain) <= 1e-12 and cand < best_comm):
                        best_comm, best_gain = cand, gain
                comm[node] = best_comm
                comm_tot[best_comm] += k_i
                if best_comm != current:
                    moved = True
                    improved_any = True
            if not moved:
                break

        if not improved_any:
            break

        # renumber communities compactly, in order of first appearance,
        # then map original nodes through this level
        remap: dict[int, int] = {}
        for c in comm:
            if c not in remap:
                remap[c] = len(remap)
        comm = [remap[c] for c in comm]
        assignment = {node: comm[prev] for node, prev in assignment.items()}

        # aggregate graph
        new_n = len(remap)
        new_adj: list[dict[int, float]] = [defaultdict(float) for _ in range(new_n)]
        new_self = [0.0] * new_n
        for i in range(n):
            ci = comm[i]
            new_self[ci] += self_loops[i]
            for j, w in adj[i].items():
                cj = comm[j]
                if ci == cj:
                    if i < j:
                        new_self[ci] += w
                else:
                    new_adj[ci][cj] += w
        adj = [dict(a) for a in new_adj]
        self_loops = new_self
        if new_n == n:
            break

    # compact final ids by sorted node order
    final_ids: dict[int, int] = {}
    final: dict[str, int] = {}
    for node in nodes:
        c = assignment[node]
        if c not in final_ids:
            final_ids[c] = len(final_ids)
        final[node] = final_ids[c]
    q = modularity(graph, final) if graph.edges else 0.0
    return Partition(communities=final, modularity=q)


@dataclass
class AccountStats:
    account_id: str
    lifespan_hours: float
    message_count: int
    channel_count: int
    mean_message_length: float


def account_stats(corpus: Corpus, cohort: set[str]) -> list[AccountStats]:
    """Per-account lifespan (hours), activity, channel spread, mean text length."""
    first: dict[str, object] = {}
    last: dict[str, object] = {}
    counts: Counter = Counter()
    channels: defaultdict[str, set[str]] = defaultdict(set)
    length_sum: Counter = Counter()
    for msg in corpus.iter_messages():
        a = msg.account_id
        if a not in cohort:
            continue
        counts[a] += 1
        channels[a].add(msg.channel_id)
        length_sum[a] += len(msg.text)
        if a not in first or msg.timestamp < first[a]:
            first[a] = msg.timestamp
        if a not in last or msg.timestamp > last[a]:
            last[a] = msg.timestamp
    return [
        AccountStats(
            account_id=a,
            lifespan_hours=(last[a] - first[a]).total_seconds() / 3600.0,
            message_count=counts[a],
            channel_count=len(channels[a]),
            mean_message_length=length_sum[a] / counts[a],
        )
        for a in sorted(counts)
    ]


@dataclass
class EffectivenessReport:
    mean: float
    message_count: int
    distribution: Counter


def effectiveness(corpus: Corpus, cohort: set[str]) -> EffectivenessReport:
    """Mean replies received per message sent by the cohort."""
    total = 0
    n = 0
    dist: Counter = Counter()
    for msg in corpus.iter_messages():
        if msg.account_id not in cohort:
            continue
        replies = corpus.reply_count(msg.key)
        dist[replies] += 1
        total += replies
        n += 1
    if n == 0:
        raise DataError("cohort wrote no messages")
    return EffectivenessReport(mean=total / n, message_count=n, distribution=dist)


_TOKEN_RE = re.compile(r"[^\W\d_]+", re.UNICODE)


@dataclass
class WordshiftEntry:
    stem: str
    score: float      # relative frequency in A minus relative frequency in B
    freq_a: float
    freq_b: float


def wordshift(texts_a: list[str], texts_b: list[str], top_k: int = 20) -> tuple[list[WordshiftEntry], list[WordshiftEntry]]:
    """Ranked stem-frequency shifts between two corpora.

    Tokens are lowercased word runs, stemmed per script. Score per stem is
    relative frequency in A minus in B; returns the top-k for each side.
    """
    if not texts_a or not texts_b:
        raise DataError("wordshift requires two non-empty text collections")

    def frequencies(texts: list[str]) -> dict[str, float]:
        counts: Counter = Counter()
        for text in texts:
            for token in _TOKEN_RE.findall(text.lower()):
                counts[stem(token)] += 1
        total = sum(counts.values())
        if total == 0:
            return {}
        return {s: c / total for s, c in counts.items()}

    fa = frequencies(texts_a)
    fb = frequencies(texts_b)
    entries = [
        WordshiftEntry(s, fa.get(s, 0.0) - fb.get(s, 0.0), fa.get(s, 0.0), fb.get(s, 0.0))
        for s in set(fa) | set(fb)
    ]
    a_side = sorted((e for e in entries if e.score > 0), key=lambda e: (-e.score, e.stem))
    b_side = sorted((e for e in entries if e.score < 0), key=lambda e: (e.score, e.stem))
    return a_side[:top_k], b_side[:top_k]
