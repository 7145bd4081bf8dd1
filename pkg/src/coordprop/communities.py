"""Louvain community detection and threshold-dismantling coordination scores."""

from __future__ import annotations

import csv
import random
from collections import defaultdict
from typing import Hashable, Mapping

from .simnet import NetworkError, SimilarityNetwork

IMPROVEMENT_EPS = 1e-12


def modularity(net: SimilarityNetwork, partition: Mapping[str, Hashable], resolution: float = 1.0) -> float:
    """Weighted Newman modularity with a resolution factor."""
    m = sum(net.edges.values())
    if m == 0.0:
        return 0.0
    internal = defaultdict(float)
    total = defaultdict(float)
    for (a, b), w in net.edges.items():
        if partition[a] == partition[b]:
            internal[partition[a]] += w
    for node, s in net.strength().items():
        total[partition[node]] += s
    return sum(internal[c] / m - resolution * (total[c] / (2.0 * m)) ** 2 for c in total)


class _Level:
    """Aggregated graph for one Louvain level.

    Nodes are 0..n-1; ``adj`` excludes self-loops, ``loops`` holds the summed
    weight of edges collapsed inside each node.
    """

    def __init__(self, n, adj, loops):
        self.n = n
        self.adj = adj
        self.loops = loops
        self.k = [sum(adj[i].values()) + 2.0 * loops[i] for i in range(n)]

    def aggregate(self, comm):
        labels = sorted(set(comm))
        remap = {c: i for i, c in enumerate(labels)}
        n = len(labels)
        adj = [defaultdict(float) for _ in range(n)]
        loops = [0.0] * n
        for i in range(self.n):
            ci = remap[comm[i]]
            loops[ci] += self.loops[i]
            for j, w in self.adj[i].items():
                if j < i:
                    continue
                cj = remap[comm[j]]
                if ci == cj:
                    loops[ci] += w
                else:
                    adj[ci][cj] += w
                    adj[cj][ci] += w
        return _Level(n, [dict(a) for a in adj], loops), [remap[c] for c in comm]


def _local_moves(level: _Level, comm: list[int], m2: float, resolution: float, rng: random.Random) -> bool:
    """Move single nodes while modularity strictly improves. Returns True if anything moved."""
    tot = defaultdict(float)
    for i in range(level.n):
        tot[comm[i]] += level.k[i]
    order = list(range(level.n))
    rng.shuffle(order)
    next_label = max(comm) + 1 if comm else 0
    moved_any = False
    improved = True
    while improved:
        improved = False
        for i in order:
            ki = level.k[i]
            own = comm[i]
            links = defaultdict(float)
            for j, w in level.adj[i].items():
                links[comm[j]] += w
            tot[own] -= ki
            # gain of joining community c, relative to sitting alone (which scores 0)
            def gain(c):
                return links.get(c, 0.0) - resolution * tot[c] * ki / m2

            best, best_gain = own, gain(own)
            for c in sorted(links):
                g = gain(c)
                if g > best_gain + IMPROVEMENT_EPS:
                    best, best_gain = c, g
            if best_gain < -IMPROVEMENT_EPS and tot[own] > 0.0:
                best, best_gain = next_label, 0.0
                next_label += 1
            tot[best] += ki
            if best != own:
                comm[i] = best
                improved = True
                moved_any = True
    return moved_any


def _louvain_pass(base: _Level, start: list[int], m2, resolution, rng) -> list[int]:
    """Full multi-level Louvain from an initial node partition of ``base``."""
    # membership: base node -> node of the current level
    level, membership = base.aggregate(start)
    comm = list(range(level.n))
    while True:
        moved = _local_moves(level, comm, m2, resolution, rng)
        if not moved:
            break
        level, comm_idx = level.aggregate(comm)
        membership = [comm_idx[membership[i]] for i in range(base.n)]
        comm = list(range(level.n))
    return membership


def louvain(net: SimilarityNetwork, resolution: float = 1.0, seed: int = 0) -> dict[str, int]:
    """Louvain partition of ``net``.

    Node visiting order comes from ``seed``.  After the multi-level passes the
    partition is re-checked with single-node moves on the original graph and
    the passes are repeated until no single move improves modularity, so the
    result is always single-move locally optimal.  Labels are dense and
    ordered by descending community size (ties: smallest member id).
    """
    if not net.nodes:
        raise NetworkError("empty network")
    nodes = list(net.nodes)
    index = {u: i for i, u in enumerate(nodes)}
    adj = [dict() for _ in nodes]
    for (a, b), w in net.edges.items():
        adj[index[a]][index[b]] = w
        adj[index[b]][index[a]] = w
    base = _Level(len(nodes), adj, [0.0] * len(nodes))
    m2 = sum(base.k)
    if m2 == 0.0:
        return _relabel(nodes, list(range(len(nodes))))

    rng = random.Random(seed)
    membership = list(range(len(nodes)))
    while True:
        membership = _louvain_pass(base, membership, m2, resolution, rng)
        if not _local_moves(base, membership, m2, resolution, rng):
            break
    return _relabel(nodes, membership)


def _relabel(nodes, membership) -> dict[str, int]:
    groups = defaultdict(list)
    for u, c in zip(nodes, membership):
        groups[c].append(u)
    ordered = sorted(groups.values(), key=lambda g: (-len(g), min(g)))
    return {u: label for label, g in enumerate(ordered) for u in sorted(g)}


def is_locally_optimal(net: SimilarityNetwork, partition: Mapping[str, int], resolution: float = 1.0) -> bool:
    """True if no single node move (to any community or to a new one) raises modularity."""
    q = modularity(net, partition, resolution)
    labels = set(partition.values())
    fresh = object()
    for node in net.nodes:
        for c in list(labels) + [fresh]:
            if c == partition[node]:
                continue
            trial = dict(partition)
            trial[node] = c
            if modularity(net, trial, resolution) > q + 1e-10:
                return False
    return True


def _components(alive: set[str], adj: Mapping[str, Mapping[str, float]]) -> list[set[str]]:
    seen: set[str] = set()
    comps = []
    for start in sorted(alive):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in comp:
                    comp.add(v)
                    stack.append(v)
        seen |= comp
        comps.append(comp)
    return comps


def _still_connected(adj: Mapping[str, Mapping[str, float]], a: str, b: str) -> bool:
    """Interleaved BFS from both ends; stops as soon as the searches meet or one side is exhausted."""
    if a == b:
        return True
    seen = ({a}, {b})
    frontier = ([a], [b])
    while frontier[0] and frontier[1]:
        side = 0 if len(frontier[0]) <= len(frontier[1]) else 1
        nxt = []
        for u in frontier[side]:
            for v in adj[u]:
                if v in seen[1 - side]:
                    return True
                if v not in seen[side]:
                    seen[side].add(v)
                    nxt.append(v)
        frontier[side][:] = nxt
    return False


def dismantle_raw(net: SimilarityNetwork) -> dict[str, float]:
    """Raw dismantling thresholds: the edge-weight threshold at which each node leaves the LCC.

    Thresholds are the distinct edge weights in ascending order.  At each one,
    edges lighter than the threshold are deleted and every node outside the
    largest connected component (ties: the component holding the smallest
    node id) is removed and scored with the threshold.  Survivors of the last
    threshold score the maximum weight.
    """
    if not net.nodes or not net.edges:
        raise NetworkError("empty network")
    thresholds = sorted(set(net.edges.values()))
    by_weight = sorted(net.edges.items(), key=lambda e: e[1])
    adj = {n: dict(nb) for n, nb in net.adjacency().items()}
    alive = set(net.nodes)
    raw: dict[str, float] = {}
    pos = 0
    for step, t in enumerate(thresholds):
        deleted = []
        while pos < len(by_weight) and by_weight[pos][1] < t:
            (a, b), _ = by_weight[pos]
            pos += 1
            if b in adj[a]:
                del adj[a][b]
                del adj[b][a]
                deleted.append((a, b))
        # alive is connected after every step but the first, so a component
        # scan is only needed when some deleted edge actually split it
        if step > 0 and all(_still_connected(adj, a, b) for a, b in deleted):
            continue
        comps = _components(alive, adj)
        # comps come out ordered by smallest member, so max() keeps the first on ties
        lcc = max(comps, key=len)
        for u in alive - lcc:
            raw[u] = t
            for v in adj[u]:
                adj[v].pop(u, None)
            adj[u] = {}
        alive = lcc
    for u in alive:
        raw[u] = thresholds[-1]
    return raw


def normalize_scores(raw: Mapping[str, float]) -> dict[str, float]:
    lo, hi = min(raw.values()), max(raw.values())
    if hi == lo:
        return dict.fromkeys(raw, 1.0)
    return {u: (r - lo) / (hi - lo) for u, r in raw.items()}


def dismantle(net: SimilarityNetwork) -> dict[str, float]:
    """Coordination scores in [0, 1] (min-max normalized dismantling thresholds)."""
    return normalize_scores(dismantle_raw(net))


def label_assignment(assignment: Mapping[str, int], name_map: Mapping[int, str] | None = None) -> dict[str, str]:
    """Attach human-readable community names; unnamed communities keep their number."""
    name_map = dict(name_map or {})
    labels = set(assignment.values())
    names = {c: name_map.get(c, str(c)) for c in labels}
    for c in name_map:
        if c not in labels:
            names.setdefault(c, name_map[c])
    seen: dict[str, int] = {}
    for c, name in sorted(names.items()):
        if name in seen:
            raise ValueError(f"duplicate community name {name!r} for communities {seen[name]} and {c}")
        seen[name] = c
    return {u: names[c] for u, c in assignment.items()}


def write_assignment(assignment: Mapping[str, int], scores: Mapping[str, float], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "community", "coordination_score"])
        for u in sorted(assignment):
            w.writerow([u, assignment[u], f"{scores[u]:.6f}"])


def read_assignment(path) -> tuple[dict[str, int], dict[str, float]]:
    assignment, scores = {}, {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            assignment[row["user_id"]] = int(row["community"])
            scores[row["user_id"]] = float(row["coordination_score"])
    return assignment, scores
