"""Pearson correlation with t-test p-values, external-signal trends and the correlation report."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

from .trends import K_TOL, TrendSeries, check_grid, default_k_grid, members_of

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 10_000


class ConstantSeriesError(ValueError):
    pass


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the regularized incomplete beta (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = _CF_TINY if abs(d) < _CF_TINY else d
        c = 1.0 + aa / c
        c = _CF_TINY if abs(c) < _CF_TINY else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = _CF_TINY if abs(d) < _CF_TINY else d
        c = 1.0 + aa / c
        c = _CF_TINY if abs(c) < _CF_TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must be in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    return min(1.0, betainc(df / 2.0, 0.5, df / (df + t * t)))


def t_cdf(t: float, df: float) -> float:
    tail = 0.5 * t_sf_two_sided(t, df)
    return 1.0 - tail if t >= 0 else tail


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Sample Pearson r and its two-sided p-value (t-test with n - 2 df)."""
    n = len(x)
    if n != len(y):
        raise ValueError(f"length mismatch: {n} vs {len(y)}")
    if n < 3:
        raise ValueError(f"need at least 3 points, got {n}")
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = math.fsum(v * v for v in dx)
    syy = math.fsum(v * v for v in dy)
    if sxx == 0.0 or syy == 0.0:
        raise ConstantSeriesError("constant series")
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    r = max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return r, t_sf_two_sided(t, n - 2)


def stars(p: float | None) -> str:
    if p is None:
        return ""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


def signal_trend(
    signal: Mapping[str, float],
    c_u: Mapping[str, float],
    assignment: Mapping[str, Hashable],
    community,
    k_grid: Sequence[float] | None = None,
) -> TrendSeries:
    """Mean external signal (automation score, or 0/1 suspension) over members with C_u >= k.

    Members without a signal record are skipped at every k; ``items`` counts
    the members that contributed.
    """
    ks = check_grid(k_grid if k_grid is not None else default_k_grid())
    members = members_of(assignment, community)
    if not any(u in signal for u in members):
        raise ValueError(f"no signal values for any member of community {community!r}")
    values, users, items = [], [], []
    for k in ks:
        sel = [u for u in members if c_u.get(u, -1.0) >= k - K_TOL]
        have = [float(signal[u]) for u in sel if u in signal]
        users.append(len(sel))
        items.append(len(have))
        values.append(math.fsum(have) / len(have) if have else None)
    return TrendSeries(community, ks, tuple(values), tuple(users), tuple(items))


@dataclass(frozen=True)
class CorrelationEntry:
    community: Hashable
    signal: str
    r: float | None
    p: float | None
    n: int
    note: str = ""

    @property
    def stars(self) -> str:
        return stars(self.p)


SIGNALS = ("coordination", "automation", "suspensions")


def correlate_trends(xs: Sequence[float | None], ys: Sequence[float | None]) -> tuple[float | None, float | None, int, str]:
    pts = [(x, y) for x, y in zip(xs, ys) if x is not None and y is not None]
    if len(pts) < 3:
        return None, None, len(pts), f"{len(pts)} common points"
    a, b = zip(*pts)
    try:
        r, p = pearson(a, b)
    except ConstantSeriesError:
        return None, None, len(pts), "constant series"
    return r, p, len(pts), ""


@dataclass(frozen=True)
class ReportRow:
    community: Hashable
    entries: Mapping[str, CorrelationEntry]
    delta: float | None = None
    delta_pct: float | None = None


def correlation_report(prop_trends, automation_trends=None, suspension_trends=None, deltas=None) -> list[ReportRow]:
    """Per-community correlation of propaganda trends with (a) the k grid, (b) automation, (c) suspensions.

    Trends are matched by community; include an ``"overall"`` trend to get the
    pooled row.  Correlations use only grid points defined on both sides, so
    n is the number of such points.  Pairs that cannot be correlated get
    ``r = None`` and a note.
    """
    automation_trends = {t.community: t for t in (automation_trends or [])}
    suspension_trends = {t.community: t for t in (suspension_trends or [])}
    deltas = {d.community: d for d in (deltas or [])}
    rows = []
    for pt in prop_trends:
        if automation_trends.get(pt.community) is not None and automation_trends[pt.community].ks != pt.ks:
            raise ValueError(f"automation trend for {pt.community!r} is on a different grid")
        if suspension_trends.get(pt.community) is not None and suspension_trends[pt.community].ks != pt.ks:
            raise ValueError(f"suspension trend for {pt.community!r} is on a different grid")
        against = {
            "coordination": pt.ks,
            "automation": automation_trends[pt.community].values if pt.community in automation_trends else None,
            "suspensions": suspension_trends[pt.community].values if pt.community in suspension_trends else None,
        }
        entries = {}
        for sig in SIGNALS:
            other = against[sig]
            if other is None:
                entries[sig] = CorrelationEntry(pt.community, sig, None, None, 0, "no signal")
                continue
            r, p, n, note = correlate_trends(pt.values, other)
            entries[sig] = CorrelationEntry(pt.community, sig, r, p, n, note)
        d = deltas.get(pt.community)
        rows.append(ReportRow(pt.community, entries, d.delta if d else None, d.delta_pct if d else None))
    return rows


def _fmt_r(e: CorrelationEntry) -> str:
    return "" if e.r is None else f"{e.r:+.3f}"


def write_report_csv(rows: Sequence[ReportRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["community"]
        for sig in SIGNALS:
            header += [f"{sig}_r", f"{sig}_p", f"{sig}_stars", f"{sig}_n"]
        header += ["delta", "delta_pct"]
        w.writerow(header)
        for row in rows:
            line = [row.community]
            for sig in SIGNALS:
                e = row.entries[sig]
                line += [
                    "" if e.r is None else f"{e.r:.10g}",
                    "" if e.p is None else f"{e.p:.10g}",
                    e.stars,
                    e.n,
                ]
            line += [
                "" if row.delta is None else f"{row.delta:.10g}",
                "" if row.delta_pct is None else f"{row.delta_pct:.10g}",
            ]
            w.writerow(line)


def format_report(rows: Sequence[ReportRow]) -> str:
    """Aligned text table: r with significance stars per signal, then delta (delta %)."""
    header = ["community", "(a) coordination", "(b) automation", "(c) suspensions", "delta (%)"]
    body = []
    for row in rows:
        cells = [str(row.community)]
        for sig in SIGNALS:
            e = row.entries[sig]
            cells.append(f"{_fmt_r(e)} {e.stars}".rstrip() if e.r is not None else "--")
        if row.delta is None:
            cells.append("--")
        else:
            pct = "n/a" if row.delta_pct is None else f"{row.delta_pct:+.1f}%"
            cells.append(f"{row.delta:+.3f} ({pct})")
        body.append(cells)
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in body]
    lines.append("***: p < 0.01, **: p < 0.05, *: p < 0.1")
    return "\n".join(lines) + "\n"
