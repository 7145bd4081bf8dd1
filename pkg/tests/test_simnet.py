import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coordprop import simnet
from coordprop.simnet import NetworkError, backbone, build_retweet_vectors, cosine, select_superspreaders, similarity_network

from conftest import net, retweet_corpus
from oracles import backbone_oracle, random_weighted_graph


# -- superspreaders --------------------------------------------------------


def test_top_one_percent_picks_single_user():
    rts = {f"u{i:03d}": ["t0"] for i in range(99)}
    rts["heavy"] = [f"t{i}" for i in range(50)]
    assert select_superspreaders(retweet_corpus(rts), 0.01) == ["heavy"]


def test_fraction_one_is_everyone():
    rts = {"a": ["t1"], "b": ["t1", "t2"], "c": ["t3"]}
    assert sorted(select_superspreaders(retweet_corpus(rts), 1.0)) == ["a", "b", "c"]


def test_cutoff_ties_by_id():
    rts = {"z": ["t"] * 5, "a": ["t"] * 5, "m": ["t"] * 2}
    assert select_superspreaders(retweet_corpus(rts), 0.34) == ["a", "z"]


def test_no_retweets_error():
    from coordprop.corpus import Corpus, Tweet

    with pytest.raises(NetworkError, match="no retweeting users"):
        select_superspreaders(Corpus.build([Tweet("t1", "a", 1, "hi")]))


@pytest.mark.parametrize("frac", [0.0, -0.1, 1.5])
def test_bad_fraction(frac):
    with pytest.raises(ValueError):
        select_superspreaders(retweet_corpus({"a": ["t1"]}), frac)


# -- vectors -------------------------------------------------------------------


def test_shared_by_all_vanishes():
    v = build_retweet_vectors(retweet_corpus({"a": ["t1"], "b": ["t1"]}), ["a", "b"])
    assert v == {"a": {}, "b": {}}


def test_single_retweeter_weight():
    v = build_retweet_vectors(retweet_corpus({"a": ["t1"], "b": ["t2"]}), ["a", "b"])
    assert v["a"]["t1"] == pytest.approx(math.log(2))


def test_tf_times_idf():
    c = retweet_corpus({"a": ["t1"] * 3, "b": ["t2"], "c": ["t2"], "d": ["t3"]})
    v = build_retweet_vectors(c, ["a", "b", "c", "d"])
    assert v["a"]["t1"] == pytest.approx(3 * math.log(4))
    assert v["a"]["t1"] == pytest.approx(4.1589, abs=1e-4)


def test_quoted_tweets_do_not_count():
    from coordprop.corpus import Corpus, Tweet

    c = Corpus.build([Tweet("r1", "a", 1, "RT", retweeted_id="t1"), Tweet("q1", "b", 2, "hm", quoted_id="t1")])
    assert select_superspreaders(c, 1.0) == ["a"]


# -- similarity network -----------------------------------------------------------


def test_identical_vectors_weight_one():
    n = similarity_network({"a": {"t1": 1.0, "t2": 2.0}, "b": {"t1": 1.0, "t2": 2.0}})
    assert n.edges == {("a", "b"): 1.0}


def test_disjoint_supports_no_edge():
    n = similarity_network({"a": {"t1": 1.0}, "b": {"t2": 1.0}})
    assert n.edges == {}


def test_half_cosine():
    n = similarity_network({"u": {"t1": 1.0, "t2": 1.0}, "v": {"t1": 1.0, "t3": 1.0}})
    assert n.edges[("u", "v")] == pytest.approx(0.5)


def test_degenerate_network():
    with pytest.raises(NetworkError, match="degenerate network"):
        similarity_network({"a": {"t1": 1.0}, "b": {}})


vec_st = st.dictionaries(st.sampled_from([f"t{i}" for i in range(6)]), st.floats(0.01, 10.0), min_size=1)


@settings(max_examples=60, deadline=None)
@given(st.dictionaries(st.sampled_from("abcdef"), vec_st, min_size=2))
def test_inverted_index_matches_all_pairs(vectors):
    n = similarity_network(vectors)
    users = sorted(vectors)
    for i, a in enumerate(users):
        for b in users[i + 1 :]:
            c = cosine(vectors[a], vectors[b])
            if c > 0:
                assert n.edges[(a, b)] == pytest.approx(c, abs=1e-12)
                assert 0.0 < n.edges[(a, b)] <= 1.0
            else:
                assert (a, b) not in n.edges


@settings(max_examples=60, deadline=None)
@given(vec_st, vec_st, st.floats(0.1, 100.0))
def test_cosine_scale_invariant(u, v, s):
    assert cosine({k: s * x for k, x in u.items()}, v) == pytest.approx(cosine(u, v), abs=1e-12)


def test_network_deterministic(tmp_path):
    rng = random.Random(3)
    rts = {f"u{i}": [f"t{rng.randrange(30)}" for _ in range(20)] for i in range(15)}
    c = retweet_corpus(rts)
    out = []
    for name in ("a.csv", "b.csv"):
        users = select_superspreaders(c, 1.0)
        nw = backbone(similarity_network(build_retweet_vectors(c, users)), 0.05)
        simnet.write_edges(nw, tmp_path / name)
        out.append((tmp_path / name).read_bytes())
    assert out[0] == out[1]
    assert simnet.read_edges(tmp_path / "a.csv").edges == nw.edges


# -- backbone -----------------------------------------------------------------------


def test_degree_two_fraction_point_nine():
    # hub h has edges 0.9 (to x) and 0.1 (to y); x and y also hang off a big uniform node set
    edges = {("h", "x"): 0.9, ("h", "y"): 0.1}
    fill = {("x", f"f{i}"): 0.9 for i in range(1)}
    fill.update({("y", f"g{i}"): 0.1 for i in range(1)})
    nw = net({**edges, **fill})
    assert simnet.disparity_significance(0.9, 2) == pytest.approx(0.1)
    # at the hub: significance 0.1 -> kept at alpha 0.15 and not at 0.05
    sig_hub = simnet.disparity_significance(0.9 / 1.0, 2)
    assert sig_hub < 0.15 and not sig_hub < 0.05
    # x has strength 1.8 split evenly: significance 0.5, never rescues the edge
    assert simnet.disparity_significance(0.9 / 1.8, 2) == pytest.approx(0.5)
    assert ("h", "x") in backbone(nw, 0.15).edges
    assert ("h", "x") not in backbone(nw, 0.05).edges


def test_uniform_star_kept_by_leaves():
    nw = net({("hub", f"l{i}"): 0.3 for i in range(5)})
    assert simnet.disparity_significance(0.2, 5) == pytest.approx(0.4096)
    assert backbone(nw, 0.05).edges == nw.edges


def test_alpha_near_one_keeps_everything():
    rng = random.Random(0)
    for _ in range(10):
        nw = net(random_weighted_graph(rng))
        assert backbone(nw, 0.999999).edges == nw.edges


def test_empty_network_error():
    with pytest.raises(NetworkError):
        backbone(net({}, ["a", "b"]))


def test_isolated_nodes_dropped():
    nw = net({("h", "x"): 0.9, ("h", "y"): 0.1, ("x", "z"): 0.9, ("y", "w"): 0.1})
    bb = backbone(nw, 0.05)
    assert all(any(n in e for e in bb.edges) for n in bb.nodes)


def test_backbone_matches_quadrature_oracle():
    rng = random.Random(11)
    for _ in range(25):
        edges = random_weighted_graph(rng)
        for alpha in (0.01, 0.05, 0.2):
            assert set(backbone(net(edges), alpha).edges) == backbone_oracle(edges, alpha)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.001, 0.5), st.floats(0.001, 0.5))
def test_backbone_monotone_in_alpha(seed, a1, a2):
    edges = random_weighted_graph(random.Random(seed))
    lo, hi = sorted((a1, a2))
    assert set(backbone(net(edges), lo).edges) <= set(backbone(net(edges), hi).edges)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_edge_fractions_sum_to_one(seed):
    nw = net(random_weighted_graph(random.Random(seed)))
    strength = nw.strength()
    for node, nbrs in nw.adjacency().items():
        fr = [w / strength[node] for w in nbrs.values()]
        assert all(0 < f <= 1 for f in fr)
        assert math.fsum(fr) == pytest.approx(1.0, abs=1e-9)


def test_network_rejects_bad_edges():
    with pytest.raises(NetworkError):
        net({("a", "a"): 0.5})
    with pytest.raises(NetworkError):
        net({("a", "b"): 1.5})
