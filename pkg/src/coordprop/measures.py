"""User and community propaganda aggregation, coordination-conditioned trends, I and delta."""

from __future__ import annotations

import csv
import itertools
import math
import statistics
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

from .stats import ConstantSeriesError, pearson
from .trends import K_TOL, TrendSeries, check_grid, default_k_grid, members_of

PSI = ("median", "mean", "majority_voting", "max")
PHI = ("mean", "median", "ratio")
ITEM_KINDS = ("tweets", "articles")

@dataclass(frozen=True)
class MeasureSpec:
    id: str
    item_kind: str
    psi: str
    phi: str

    def __post_init__(self):
        if self.item_kind not in ITEM_KINDS:
            raise ValueError(f"unknown item kind {self.item_kind!r}")
        if self.psi not in PSI:
            raise ValueError(f"unknown user aggregation {self.psi!r}")
        if self.phi not in PHI:
            raise ValueError(f"unknown community aggregation {self.phi!r}")


def _catalog() -> dict[str, MeasureSpec]:
    # ids that appear in the published table keep their numbers; the rest fill the gaps
    known = {
        1: ("tweets", "median", "mean"),
        2: ("tweets", "majority_voting", "mean"),
        3: ("tweets", "majority_voting", "ratio"),
        4: ("tweets", "median", "ratio"),
        10: ("articles", "median", "mean"),
        11: ("articles", "majority_voting", "mean"),
        12: ("articles", "majority_voting", "ratio"),
        13: ("tweets", "median", "median"),
        21: ("articles", "median", "ratio"),
        22: ("tweets", "max", "mean"),
        23: ("tweets", "max", "ratio"),
        24: ("articles", "median", "median"),
    }
    taken = set(known.values())
    rest = [c for c in itertools.product(ITEM_KINDS, PSI, PHI) if c not in taken]
    free = [i for i in range(1, 25) if i not in known]
    known.update(zip(free, rest))
    return {f"M{i}": MeasureSpec(f"M{i}", *known[i]) for i in sorted(known)}


MEASURES = _catalog()


def get_measure(measure_id: str) -> MeasureSpec:
    key = measure_id.replace("_", "").upper()
    try:
        return MEASURES[key]
    except KeyError:
        raise ValueError(f"unknown measure {measure_id!r}; known: {', '.join(MEASURES)}") from None


def aggregate_user(scores: Sequence[float], psi: str) -> float:
    if not scores:
        raise ValueError("no item scores")
    if psi == "median":
        return float(statistics.median(scores))
    if psi == "mean":
        return math.fsum(scores) / len(scores)
    if psi == "max":
        return float(max(scores))
    if psi == "majority_voting":
        pos = sum(1 for s in scores if s > 0.5)
        neg = len(scores) - pos
        return 1.0 if pos > neg else 0.0 if pos < neg else 0.5
    raise ValueError(f"unknown user aggregation {psi!r}")


def user_propaganda(scores: Mapping[str, Sequence[float]], psi: str) -> dict[str, float]:
    """P_u per user.  Users without items are left out rather than scored 0."""
    return {u: aggregate_user(s, psi) for u, s in scores.items() if len(s)}


def aggregate_community(values: Sequence[float], phi: str) -> float:
    if phi == "mean":
        return math.fsum(values) / len(values)
    if phi == "median":
        return float(statistics.median(values))
    if phi == "ratio":
        return sum(1 for v in values if v > 0.5) / len(values)
    raise ValueError(f"unknown community aggregation {phi!r}")


def _trend(community, ks, members, coord, value_of, count_of, agg) -> TrendSeries:
    values, users, items = [], [], []
    for k in ks:
        sel = [u for u in members if coord.get(u, -1.0) >= k - K_TOL and value_of(u) is not None]
        users.append(len(sel))
        items.append(sum(count_of(u) for u in sel))
        values.append(agg([value_of(u) for u in sel]) if sel else None)
    return TrendSeries(community, ks, tuple(values), tuple(users), tuple(items))


def community_trend(
    p_u: Mapping[str, float],
    c_u: Mapping[str, float],
    assignment: Mapping[str, Hashable],
    community,
    phi: str,
    k_grid: Sequence[float] | None = None,
    item_counts: Mapping[str, int] | None = None,
) -> TrendSeries:
    """Community propaganda P_c(c, k) over members with coordination >= k."""
    ks = check_grid(k_grid if k_grid is not None else default_k_grid())
    if phi not in PHI:
        raise ValueError(f"unknown community aggregation {phi!r}")
    members = members_of(assignment, community)
    counts = item_counts or {}
    return _trend(
        community, ks, members, c_u,
        p_u.get, lambda u: counts.get(u, 0),
        lambda vals: aggregate_community(vals, phi),
    )


@dataclass(frozen=True)
class InformativenessResult:
    measure_id: str
    mean_r: float
    informativeness: float
    pairs: tuple[tuple[Hashable, Hashable, float], ...]
    excluded: tuple[tuple[Hashable, Hashable, str], ...]


def informativeness(trends: Sequence[TrendSeries], measure_id: str = "") -> InformativenessResult:
    """I = (1 - mean pairwise Pearson r) / 2 over all community pairs.

    Each pair is correlated on the grid points where both trends are defined;
    pairs with fewer than 3 such points, or with a constant side, are excluded
    and listed in the result.
    """
    if len(trends) < 2:
        raise ValueError("informativeness needs at least 2 communities")
    grid = trends[0].ks
    if any(t.ks != grid for t in trends):
        raise ValueError("trends must share one k grid")
    pairs, excluded = [], []
    for a, b in itertools.combinations(trends, 2):
        common = [(x, y) for x, y in zip(a.values, b.values) if x is not None and y is not None]
        if len(common) < 3:
            excluded.append((a.community, b.community, f"{len(common)} common points"))
            continue
        xs, ys = zip(*common)
        try:
            r, _ = pearson(xs, ys)
        except ConstantSeriesError:
            excluded.append((a.community, b.community, "constant trend"))
            continue
        pairs.append((a.community, b.community, r))
    if not pairs:
        raise ValueError("no community pair has a defined correlation")
    mean_r = math.fsum(r for _, _, r in pairs) / len(pairs)
    return InformativenessResult(measure_id, mean_r, (1.0 - mean_r) / 2.0, tuple(pairs), tuple(excluded))


@dataclass(frozen=True)
class DeltaStat:
    community: Hashable
    baseline: float
    top: float
    delta: float
    delta_pct: float | None


def delta(trend: TrendSeries, k_low: float = 0.0, k_high: float = 0.9) -> DeltaStat:
    """Change in community propaganda between all members (k=0) and the core (k=0.9)."""
    vals = {}
    for k in (k_low, k_high):
        try:
            v = trend.value_at(k)
        except KeyError:
            raise ValueError(f"k grid has no point k={k}") from None
        if v is None:
            raise ValueError(f"trend for {trend.community!r} undefined at k={k}")
        vals[k] = v
    d = vals[k_high] - vals[k_low]
    pct = 100.0 * d / vals[k_low] if vals[k_low] != 0.0 else None
    return DeltaStat(trend.community, vals[k_low], vals[k_high], d, pct)


def frame_conditioned_trend(
    article_scores: Mapping[str, float],
    article_frames: Mapping[str, str | None],
    shares: Mapping[str, Iterable[str]],
    c_u: Mapping[str, float],
    assignment: Mapping[str, Hashable],
    community,
    frame: str,
    k_grid: Sequence[float] | None = None,
) -> TrendSeries:
    """Fraction of in-frame articles flagged as propaganda among those shared by members with C_u >= k.

    ``shares`` maps user id to the article urls they shared.  ``items``
    counts distinct in-frame articles at each k.
    """
    ks = check_grid(k_grid if k_grid is not None else default_k_grid())
    known_frames = {f for f in article_frames.values() if f is not None}
    if frame not in known_frames:
        raise ValueError(f"unknown frame {frame!r}")
    members = members_of(assignment, community)
    values, users, items = [], [], []
    for k in ks:
        sel = [u for u in members if c_u.get(u, -1.0) >= k - K_TOL]
        arts = {a for u in sel for a in shares.get(u, ()) if article_frames.get(a) == frame and a in article_scores}
        users.append(len(sel))
        items.append(len(arts))
        values.append(sum(1 for a in arts if article_scores[a] > 0.5) / len(arts) if arts else None)
    return TrendSeries(community, ks, tuple(values), tuple(users), tuple(items))


def write_trends(trends: Iterable[TrendSeries], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["community", "k", "value", "users", "items"])
        for t in trends:
            for k, v, nu, ni in zip(t.ks, t.values, t.users, t.items):
                w.writerow([t.community, f"{k:.10g}", "" if v is None else f"{v:.10g}", nu, ni])


def read_trends(path) -> list[TrendSeries]:
    rows: dict[str, list] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.setdefault(row["community"], []).append(row)
    out = []
    for c, rs in rows.items():
        out.append(
            TrendSeries(
                c,
                tuple(float(r["k"]) for r in rs),
                tuple(float(r["value"]) if r["value"] else None for r in rs),
                tuple(int(r["users"]) for r in rs),
                tuple(int(r["items"]) for r in rs),
            )
        )
    return out


def write_informativeness(rows: Iterable[tuple[MeasureSpec, InformativenessResult]], path) -> None:
    ordered = sorted(rows, key=lambda r: (-r[1].informativeness, int(r[0].id[1:])))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["measure_id", "item_kind", "psi", "phi", "I"])
        for spec, res in ordered:
            w.writerow([spec.id, spec.item_kind, spec.psi, spec.phi, f"{res.informativeness:.4f}"])
