"""Acceptance criteria 1-10, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL ...`` line (shown even under
output capture) before asserting.
"""

import hashlib
import itertools
import json
import math
import random
import statistics
import time
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from scipy import sparse
from scipy import stats as sps

from coordprop import communities as comm
from coordprop import measures as ms
from coordprop import simnet, stats, synth
from coordprop.cli import main
from coordprop.corpus import format_pct
from coordprop.propaganda import chunk_tweets, train_classifier
from coordprop.propaganda.model import logistic_loss_grad
from coordprop.trends import TrendSeries, default_k_grid

from conftest import net
from oracles import backbone_oracle, best_modularity, dismantle_oracle, random_connected_graph, random_weighted_graph, t_two_sided_closed


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail

    return emit


# -- 1 ---------------------------------------------------------------------------


def test_c01_backbone_oracle(verdict):
    rng = random.Random(1)
    graphs = [random_weighted_graph(rng, 20, 60) for _ in range(100)]
    expected = {(i, a): backbone_oracle(g, a) for i, g in enumerate(graphs) for a in (0.01, 0.05, 0.2)}
    t = time.perf_counter()
    got = {(i, a): set(simnet.backbone(net(g), a).edges) for i, g in enumerate(graphs) for a in (0.01, 0.05, 0.2)}
    elapsed = time.perf_counter() - t
    mismatches = sum(got[k] != expected[k] for k in expected)
    verdict(1, mismatches == 0 and elapsed < 10, f"{mismatches} mismatches over 300 (graph, alpha) cases, {elapsed:.2f}s")


# -- 2 ---------------------------------------------------------------------------


def test_c02_louvain_quality(verdict):
    rng = random.Random(2)
    t = time.perf_counter()
    worst, not_local = math.inf, 0
    for _ in range(50):
        n = rng.randint(2, 8)
        edges = random_connected_graph(rng, n, rng.randint(0, n * (n - 1) // 2))
        nw = net(edges)
        part = comm.louvain(nw, seed=0)
        worst = min(worst, comm.modularity(nw, part) - best_modularity(edges))
        not_local += not comm.is_locally_optimal(nw, part)
    elapsed = time.perf_counter() - t
    ok = worst >= -0.05 and not_local == 0 and elapsed < 60
    verdict(2, ok, f"worst gap to optimum {worst:+.4f}, {not_local} not locally optimal, {elapsed:.1f}s")


# -- 3 ---------------------------------------------------------------------------


def test_c03_dismantling_oracle(verdict):
    rng = random.Random(3)
    cases, mismatches, bad_range = 0, 0, 0
    while cases < 20:
        edges = random_weighted_graph(rng, 10, 20)
        edges = {k: round(w, 1) or 0.1 for k, w in edges.items()}
        expected = dismantle_oracle(edges)
        if len(set(expected.values())) < 2:
            continue  # range coverage needs two distinct detachment thresholds
        cases += 1
        nw = net(edges)
        mismatches += comm.dismantle_raw(nw) != expected
        scores = comm.dismantle(nw)
        bad_range += not (min(scores.values()) == 0.0 and max(scores.values()) == 1.0)
    verdict(3, mismatches == 0 and bad_range == 0, f"{mismatches} mismatches, {bad_range} graphs without full [0,1] range, 20 graphs")


# -- 4 ---------------------------------------------------------------------------


def test_c04_classifier(verdict):
    data = synth.training_corpus(1000, seed=0)
    train, held = data[:800], data[800:]
    model = train_classifier(train, lam=1e-3)
    p = model.predict_proba([t for t, _ in held])
    acc = float(np.mean((p > 0.5) == np.array([l for _, l in held])))

    worst_grad = 0.0
    for seed in range(10):
        r = np.random.default_rng(seed)
        X = sparse.csr_matrix(r.normal(size=(15, 6)) * (r.random((15, 6)) < 0.5))
        y = (r.random(15) < 0.5).astype(float)
        w, b, lam = r.normal(size=6), float(r.normal()), float(r.uniform(0, 1))
        _, gw, gb = logistic_loss_grad(w, b, X, y, lam)
        num, h = [], 1e-6
        for j in range(7):
            e = np.zeros(7)
            e[j] = h
            f = lambda v: logistic_loss_grad(v[:6], v[6], X, y, lam)[0]
            v = np.append(w, b)
            num.append((f(v + e) - f(v - e)) / (2 * h))
        num = np.array(num)
        worst_grad = max(worst_grad, np.linalg.norm(np.append(gw, gb) - num) / max(np.linalg.norm(num), 1e-12))

    small = data[:200]
    norms = [float(np.linalg.norm(train_classifier(small, lam=lam).weights)) for lam in (0.01, 0.1, 1, 10, 100)]
    monotone = all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))
    ok = acc >= 0.95 and worst_grad <= 1e-5 and monotone
    verdict(4, ok, f"held-out accuracy {acc:.3f}, worst gradient rel. error {worst_grad:.1e}, norms {[round(x, 3) for x in norms]}")


# -- planted scenarios (5, 6) -----------------------------------------------------------


@pytest.fixture(scope="module")
def planted_model():
    return train_classifier(synth.training_corpus(400, seed=99), lam=1e-3)


def planted_run(cfg, model):
    """Network, communities and M1 trends computed from the generated corpus alone."""
    corpus, truth = synth.generate(cfg)
    users = simnet.select_superspreaders(corpus, 1.0)
    bb = simnet.backbone(simnet.similarity_network(simnet.build_retweet_vectors(corpus, users)), 0.05)
    part = comm.louvain(bb, seed=0)
    coord = comm.dismantle(bb)
    scores = {}
    for u in part:
        items = chunk_tweets(corpus, u, 400)
        if items:
            scores[u] = [s.score for s in model.score_items(items)]
    spec = ms.get_measure("M1")
    p_u = ms.user_propaganda(scores, spec.psi)
    by_planted = {}
    for c in sorted(set(part.values())):
        members = [u for u in part if part[u] == c]
        votes = Counter(truth.community[u] for u in members if u in truth.community)
        if not votes:
            continue
        planted = votes.most_common(1)[0][0]
        trend = ms.community_trend(p_u, coord, part, c, spec.phi, default_k_grid())
        if planted not in by_planted or len(members) > by_planted[planted][0]:
            by_planted[planted] = (len(members), trend)
    return synth.adjusted_rand_index(truth.community, part), {k: v[1] for k, v in by_planted.items()}


def test_c05_planted_recovery(verdict, planted_model):
    t = time.perf_counter()
    aris, ordered = [], 0
    for seed in range(10):
        cfg = synth.ScenarioConfig(
            [synth.CommunitySpec(80, 0.9, 0.9), synth.CommunitySpec(60, 0.9, 0.5), synth.CommunitySpec(50, 0.9, 0.1)],
            seed=seed,
        )
        ari, trends = planted_run(cfg, planted_model)
        aris.append(ari)
        base = [trends[c].values[0] if c in trends else None for c in (0, 1, 2)]
        ordered += None not in base and base[0] > base[1] > base[2]
    elapsed = time.perf_counter() - t
    med = statistics.median(aris)
    ok = med >= 0.9 and ordered == 10 and elapsed < 300
    verdict(5, ok, f"median ARI {med:.3f} (min {min(aris):.3f}), pi ordering held in {ordered}/10 seeds, {elapsed:.0f}s")


def test_c06_sign_recovery(verdict, planted_model):
    hits, summary = 0, []
    for seed in range(10):
        cfg = synth.ScenarioConfig(
            [
                synth.CommunitySpec(80, 0.9, 0.5, rho_spread=0.8, pi_slope=0.8),
                synth.CommunitySpec(60, 0.9, 0.5, rho_spread=0.8, pi_slope=-0.8),
            ],
            seed=seed,
        )
        _, trends = planted_run(cfg, planted_model)
        res = []
        for c in (0, 1):
            r, p, _, _ = stats.correlate_trends(trends[c].values, trends[c].ks) if c in trends else (None, None, 0, "")
            res.append((r, p))
        (r_up, p_up), (r_dn, p_dn) = res
        ok = None not in (r_up, r_dn) and r_up > 0.5 and r_dn < -0.5 and p_up < 0.05 and p_dn < 0.05
        hits += ok
        summary.append(f"{r_up:+.2f}/{r_dn:+.2f}" if None not in (r_up, r_dn) else "n/a")
    verdict(6, hits >= 8, f"{hits}/10 seeds with r > +0.5 and r < -0.5 at p < 0.05 ({', '.join(summary)})")


# -- 7 ---------------------------------------------------------------------------------


def test_c07_measures_arithmetic(verdict):
    rng = random.Random(7)
    worst = 0.0
    for _ in range(200):
        n = rng.randint(1, 60)
        p = {f"u{i}": rng.random() for i in range(n)}
        c = {u: rng.random() for u in p}
        t = ms.community_trend(p, c, dict.fromkeys(p, 0), 0, "mean", default_k_grid())
        exact = float(sum(Fraction(v) for v in p.values()) / n)
        worst = max(worst, abs(t.values[0] - exact))
    ks = default_k_grid()
    a = [math.sin(3 * k) + k for k in ks]
    mk = lambda name, vals: TrendSeries(name, ks, tuple(vals), (1,) * len(ks), (1,) * len(ks))
    i_same = ms.informativeness([mk("x", a), mk("y", a)]).informativeness
    i_anti = ms.informativeness([mk("x", a), mk("y", [1.0 - v for v in a])]).informativeness
    ok = worst <= 1e-12 and abs(i_same) <= 1e-9 and abs(i_anti - 1.0) <= 1e-9
    verdict(7, ok, f"max |P_c(0) - mean| {worst:.1e}, I(identical) {i_same:.1e}, I(anticorrelated) {i_anti:.12f}")


# -- 8 ---------------------------------------------------------------------------------


def test_c08_table_arithmetic(verdict):
    ks = (0.0, 0.9)
    d = ms.delta(TrendSeries("TVT", ks, (0.285, 0.359), (1, 1), (1, 1)))
    implied = 0.074 / 0.260
    lab = format_pct(100.0 * 179_601 / 2_064_041)
    ok = (
        abs(d.delta - 0.074) < 1e-12
        and f"{d.delta_pct:+.1f}%" == "+26.0%"
        and round(implied, 3) == 0.285
        and lab == "8.7%"
    )
    verdict(8, ok, f"delta {d.delta:+.3f} ({d.delta_pct:+.1f}%), implied baseline {implied:.4f}, LAB distinct tweets {lab}")


# -- 9 ---------------------------------------------------------------------------------


DET_SCENARIO = {
    "communities": [
        {"size": 80, "rho": 0.9, "pi": 0.5, "rho_spread": 0.8, "pi_slope": 0.8, "automation_slope": 0.4},
        {"size": 60, "rho": 0.9, "pi": 0.5, "rho_spread": 0.8, "pi_slope": -0.8, "suspension_slope": 0.2},
    ],
    "seed": 7,
}


def _digest(root):
    return {str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(root.rglob("*")) if p.is_file()}


def test_c09_cli_determinism(verdict, tmp_path):
    (tmp_path / "sc.json").write_text(json.dumps(DET_SCENARIO))
    assert main(["synth", str(tmp_path / "data"), "--scenario", str(tmp_path / "sc.json"), "--training-items", "300"]) == 0
    digests = []
    for threads in ("1", "8"):
        out = tmp_path / f"out{threads}"
        rc = main(["run", "--config", str(tmp_path / "data/pipeline.ini"), "--output", str(out),
                   "--measures", "M1,M2,M3,M4,M10", "--threads", threads])
        assert rc == 0
        digests.append(_digest(out))
    same = digests[0] == digests[1]
    diff = sorted(k for k in set(digests[0]) | set(digests[1]) if digests[0].get(k) != digests[1].get(k))
    verdict(9, same and len(digests[0]) > 20, f"{len(digests[0])} files, differing: {diff or 'none'}")


# -- 10 --------------------------------------------------------------------------------


PAIRS = [
    ([1, 2, 3, 4], [2, 1, 4, 3]),
    ([1, 2, 3], [1, 3, 2]),
    ([0, 1, 2, 3, 4], [0, 2, 1, 4, 3]),
    ([2, 4, 6, 8, 10, 12], [1, 3, 2, 5, 4, 7]),
    ([1, 2, 3, 4, 5, 6], [6, 4, 5, 3, 1, 2]),
    ([3, 1, 4, 1, 5], [9, 2, 6, 5, 3]),
    ([10, 20, 30, 40], [40, 10, 30, 20]),
    ([1, 5, 2, 8, 3, 9], [2, 3, 1, 7, 5, 6]),
    ([0, 0, 1, 1, 2], [1, 0, 1, 0, 2]),
    ([7, 3, 5], [1, 2, 4]),
]


def _hand_r(x, y):
    """Exact rational r^2 from integer sums, then the sign and one square root."""
    n = len(x)
    sx, sy = sum(x), sum(y)
    sxy = n * sum(a * b for a, b in zip(x, y)) - sx * sy
    sxx = n * sum(a * a for a in x) - sx * sx
    syy = n * sum(b * b for b in y) - sy * sy
    r2 = Fraction(sxy * sxy, sxx * syy)
    return math.copysign(math.sqrt(r2), sxy), r2


def test_c10_pearson_oracle(verdict):
    # the closed-form t tails used as the p oracle are first checked against scipy
    cdf_err = max(
        abs(t_two_sided_closed(t, df) - 2 * sps.t.sf(t, df)) for df in (1, 2, 3, 4) for t in (0.1, 0.5, 1.0, 2.0, 5.0)
    )
    worst_r = worst_p = 0.0
    for x, y in PAIRS:
        r, p = stats.pearson(x, y)
        hr, r2 = _hand_r(x, y)
        n = len(x)
        t = math.sqrt(float(r2 * (n - 2) / (1 - r2)))
        hp = t_two_sided_closed(t, n - 2)
        worst_r = max(worst_r, abs(r - hr))
        worst_p = max(worst_p, abs(p - hp))
    ok = worst_r <= 1e-10 and worst_p <= 1e-10 and cdf_err <= 1e-12
    verdict(10, ok, f"max |r - hand| {worst_r:.1e}, max |p - closed form| {worst_p:.1e} over {len(PAIRS)} pairs")
