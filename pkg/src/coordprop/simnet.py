"""Superspreader selection, TF-IDF co-retweet vectors, cosine network and disparity backbone."""

from __future__ import annotations

import csv
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .corpus import Corpus


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class SimilarityNetwork:
    """Weighted undirected graph; edges keyed by sorted ``(a, b)`` with ``a < b``."""

    nodes: tuple[str, ...]
    edges: Mapping[tuple[str, str], float] = field(default_factory=dict)

    @classmethod
    def from_edges(cls, edges: Mapping[tuple[str, str], float], nodes: Iterable[str] = ()):
        canon: dict[tuple[str, str], float] = {}
        node_set = set(nodes)
        for (a, b), w in edges.items():
            if a == b:
                raise NetworkError(f"self-loop on {a}")
            if not 0.0 <= w <= 1.0:
                raise NetworkError(f"edge weight {w} outside [0,1]")
            key = (a, b) if a < b else (b, a)
            canon[key] = float(w)
            node_set.update(key)
        return cls(tuple(sorted(node_set)), dict(sorted(canon.items())))

    def adjacency(self) -> dict[str, dict[str, float]]:
        adj: dict[str, dict[str, float]] = {n: {} for n in self.nodes}
        for (a, b), w in self.edges.items():
            adj[a][b] = w
            adj[b][a] = w
        return adj

    def degree(self) -> dict[str, int]:
        deg = dict.fromkeys(self.nodes, 0)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def strength(self) -> dict[str, float]:
        s = dict.fromkeys(self.nodes, 0.0)
        for (a, b), w in self.edges.items():
            s[a] += w
            s[b] += w
        return s

    def __len__(self):
        return len(self.nodes)


def retweet_counts(corpus: Corpus) -> Counter:
    return Counter(author for author, _ in corpus.retweet_edges())


def select_superspreaders(corpus: Corpus, fraction: float = 0.01) -> list[str]:
    """Top ``ceil(fraction * R)`` users by retweet count, R = users with at least one retweet.

    Ties are ordered by user id, so the cutoff is deterministic.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    counts = retweet_counts(corpus)
    if not counts:
        raise NetworkError("no retweeting users")
    ranked = sorted(counts, key=lambda u: (-counts[u], u))
    # guard against 0.01 * 300 = 3.0000000000000004
    n = max(1, math.ceil(round(fraction * len(ranked), 9)))
    return ranked[:n]


def build_retweet_vectors(corpus: Corpus, users: Iterable[str]) -> dict[str, dict[str, float]]:
    """Sparse TF-IDF vectors over retweeted tweet ids, one per user.

    TF is the raw retweet count, IDF is ``ln(N / df)`` over the given users.
    Tweets retweeted by every user get weight 0 and are left out.
    """
    users = list(dict.fromkeys(users))
    wanted = set(users)
    unknown = wanted.difference(corpus.by_author)
    if unknown:
        raise NetworkError(f"users not in corpus: {sorted(unknown)[:10]}")
    tf: dict[str, Counter] = {u: Counter() for u in users}
    for author, target in corpus.retweet_edges():
        if author in wanted:
            tf[author][target] += 1
    df: Counter = Counter()
    for counts in tf.values():
        df.update(counts.keys())
    n = len(users)
    idf = {t: math.log(n / d) for t, d in df.items()}
    vectors = {}
    for u in users:
        vectors[u] = {t: c * idf[t] for t, c in sorted(tf[u].items()) if idf[t] > 0.0}
    return vectors


def cosine(u: Mapping[str, float], v: Mapping[str, float]) -> float:
    if len(u) > len(v):
        u, v = v, u
    dot = sum(u[t] * v[t] for t in sorted(u) if t in v)
    su, sv = _sq_norm(u), _sq_norm(v)
    if su == 0.0 or sv == 0.0:
        return 0.0
    return min(1.0, dot / math.sqrt(su * sv))


def _sq_norm(v: Mapping[str, float]) -> float:
    # sorted order, matching the dot-product accumulation, so identical vectors give exactly 1
    return sum(v[t] * v[t] for t in sorted(v))


def similarity_network(vectors: Mapping[str, Mapping[str, float]]) -> SimilarityNetwork:
    """Cosine-similarity network; only pairs sharing a retweeted tweet are compared."""
    live = {u: v for u, v in vectors.items() if v}
    if len(live) < 2:
        raise NetworkError("degenerate network: fewer than 2 non-empty vectors")
    sq = {u: _sq_norm(v) for u, v in live.items()}
    index: dict[str, list[str]] = defaultdict(list)
    for u in sorted(live):
        for t in live[u]:
            index[t].append(u)

    dots: dict[tuple[str, str], float] = defaultdict(float)
    # accumulate per tweet in sorted order so float sums are reproducible
    for t in sorted(index):
        posting = index[t]
        for i, a in enumerate(posting):
            wa = live[a][t]
            for b in posting[i + 1 :]:
                dots[(a, b)] += wa * live[b][t]

    edges = {}
    for (a, b), dot in dots.items():
        w = min(1.0, dot / math.sqrt(sq[a] * sq[b]))
        if w > 0.0:
            edges[(a, b)] = w
    return SimilarityNetwork.from_edges(edges, nodes=live)


def disparity_significance(p: float, k: int) -> float:
    """Probability under the uniform null that a node of degree ``k`` has an edge fraction >= p."""
    return (1.0 - p) ** (k - 1)


def backbone(net: SimilarityNetwork, alpha: float = 0.05) -> SimilarityNetwork:
    """Disparity-filter backbone.

    An edge survives if it is significant (``(1 - p_ij)^(k_i - 1) < alpha``) at
    either endpoint of degree >= 2, or if either endpoint has degree 1.
    Nodes left without edges are dropped.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if not net.edges:
        raise NetworkError("empty network")
    deg = net.degree()
    strength = net.strength()
    kept = {}
    for (a, b), w in net.edges.items():
        for node in (a, b):
            k = deg[node]
            if k == 1 or disparity_significance(w / strength[node], k) < alpha:
                kept[(a, b)] = w
                break
    return SimilarityNetwork.from_edges(kept)


def write_edges(net: SimilarityNetwork, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_a", "user_b", "weight"])
        for (a, b), weight in sorted(net.edges.items()):
            w.writerow([a, b, f"{weight:.10g}"])


def read_edges(path) -> SimilarityNetwork:
    edges = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            edges[(row["user_a"], row["user_b"])] = float(row["weight"])
    return SimilarityNetwork.from_edges(edges)
