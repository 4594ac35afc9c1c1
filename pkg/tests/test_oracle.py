import math
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from bipartite_rgd import oracle, theory as th
from bipartite_rgd.graph import BipartiteMultigraph, Params
from bipartite_rgd.samplers import BiDegreeSequence


def key(params, edges):
    return BipartiteMultigraph.from_edges(params, edges).canonical()


def test_enumerate_single_pair():
    params = Params(1, 1, 1, 1)
    dist = oracle.enumerate_process(params, 2, "multi")
    assert dist.probs == {key(params, [(0, 0), (0, 0)]): 1.0}


def test_enumerate_two_step_hand_values():
    # L=2, R=1: first left endpoint uniform, then copy with prob 2/3
    params = Params(1, 1, 2, 1)
    dist = oracle.enumerate_process(params, 2, "multi")
    assert dist[key(params, [(0, 0), (0, 0)])] == pytest.approx(1 / 3, abs=1e-15)
    assert dist[key(params, [(1, 0), (1, 0)])] == pytest.approx(1 / 3, abs=1e-15)
    assert dist[key(params, [(0, 0), (1, 0)])] == pytest.approx(1 / 3, abs=1e-15)
    assert len(dist.probs) == 3


def test_enumerate_simple_forced_complete():
    params = Params(0.5, 2.0, 2, 2)
    dist = oracle.enumerate_process(params, 4, "simple")
    assert dist.probs == pytest.approx({key(params, [(0, 0), (0, 1), (1, 0), (1, 1)]): 1.0})


def test_enumerate_errors():
    with pytest.raises(oracle.CapacityError):
        oracle.enumerate_process(Params(1, 1, 4, 4), 6, "multi")
    with pytest.raises(oracle.CapacityError):
        oracle.enumerate_process(Params(1, 1, 2, 1), 3, "simple")
    with pytest.raises(ValueError):
        oracle.enumerate_process(Params(1, 1, 2, 1), 1, "other")


@pytest.mark.parametrize("L,R,t", [(L, R, t) for L in (1, 2) for R in (1, 2) for t in (0, 1, 2, 3)])
@pytest.mark.parametrize("variant", ["multi", "simple"])
def test_distributions_are_normalised(L, R, t, variant):
    if variant == "simple" and t > L * R:
        pytest.skip("beyond capacity")
    for a, b in product([0.5, 1.0, 2.0], repeat=2):
        dist = oracle.enumerate_process(Params(a, b, L, R), t, variant)
        assert abs(dist.total - 1) < 1e-10
        assert len({k for k, _ in dist.entries}) == len(dist.entries)
        if variant == "simple":
            assert all(g.is_simple() for g in dist.graphs.values())


def test_conditioning_on_full_support_is_identity():
    params = Params(1, 1, 1, 2)
    dist = oracle.enumerate_process(params, 1, "multi")
    # every graph here has the same left degree but not the same right degrees
    for deg in oracle.achievable_bidegrees(dist):
        cond = oracle.conditional_given_bidegree(dist, deg)
        assert cond.total == pytest.approx(1.0)
    params = Params(1, 1, 1, 1)
    dist = oracle.enumerate_process(params, 3, "multi")
    (deg,) = oracle.achievable_bidegrees(dist)
    assert oracle.conditional_given_bidegree(dist, deg).probs == dist.probs


def test_conditioning_on_null_event():
    params = Params(1, 1, 2, 2)
    dist = oracle.enumerate_process(params, 2, "multi")
    with pytest.raises(oracle.ConditioningError):
        oracle.conditional_given_bidegree(dist, BiDegreeSequence([3, 0], [2, 1]))


def test_conditional_examples():
    # given left degrees (1,1) and right (2,0), only one graph is possible
    params = Params(1, 1, 2, 2)
    dist = oracle.enumerate_process(params, 2, "multi")
    cond = oracle.conditional_given_bidegree(dist, BiDegreeSequence([1, 1], [2, 0]))
    assert cond.probs == {key(params, [(0, 0), (1, 0)]): 1.0}


def test_bcm_exact_examples():
    d = oracle.bcm_exact_distribution(BiDegreeSequence([1], [1]))
    assert list(d.probs.values()) == [1.0]
    d = oracle.bcm_exact_distribution(BiDegreeSequence([1, 1], [1, 1]))
    assert sorted(d.probs.values()) == pytest.approx([0.5, 0.5])
    d = oracle.bcm_exact_distribution(BiDegreeSequence([2], [2]))
    assert d.probs == pytest.approx({"0-0:2": 1.0})
    with pytest.raises(oracle.CapacityError):
        oracle.bcm_exact_distribution(BiDegreeSequence([7], [7]))


@st.composite
def degree_pairs(draw):
    left = draw(st.lists(st.integers(0, 3), min_size=1, max_size=3))
    m = sum(left)
    if m == 0 or m > 5:
        left = [1]
        m = 1
    R = draw(st.integers(1, 3))
    cuts = sorted(draw(st.lists(st.integers(0, m), min_size=R - 1, max_size=R - 1)))
    right = [b - a for a, b in zip([0] + cuts, cuts + [m])]
    return BiDegreeSequence(left, right)


@settings(max_examples=40, deadline=None)
@given(degree_pairs())
def test_bcm_law_respects_degrees(deg):
    d = oracle.bcm_exact_distribution(deg)
    assert d.total == pytest.approx(1.0, abs=1e-12)
    for g in d.graphs.values():
        assert list(g.left_degrees) == list(deg.left)
        assert list(g.right_degrees) == list(deg.right)


def test_event_mass_examples():
    params = Params(1, 1, 2, 2)
    for t in (1, 2, 3):
        dist = oracle.enumerate_process(params, t, "multi")
        assert oracle.event_mass(dist, [], [], 0, 0) == pytest.approx(1.0)
        total = math.fsum(oracle.event_mass(dist, [0], [0, 1], t1, t - t1) for t1 in range(t + 1))
        assert total == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("t", [1, 2, 3])
@pytest.mark.parametrize("a,b", list(product([0.5, 1.0, 2.0], repeat=2)))
def test_event_mass_matches_partition_formula(t, a, b):
    params = Params(a, b, 2, 2)
    dist = oracle.enumerate_process(params, t, "multi")
    for A in oracle._subsets(2):
        for B in oracle._subsets(2):
            for t1 in range(t + 1):
                for y in range(t - t1 + 1):
                    mass = oracle.event_mass(dist, A, B, t1, y)
                    lp = th.edge_partition_logprob(params, th.PartitionEvent(len(A), len(B), t1, y, t))
                    assert mass == pytest.approx(math.exp(lp), abs=1e-12)


def test_in_partition_event():
    params = Params(1, 1, 2, 2)
    g = BipartiteMultigraph.from_edges(params, [(0, 0), (1, 1), (0, 0)])
    assert oracle.in_partition_event(g, [0], [0], 2, 0)
    assert oracle.in_partition_event(g, [1], [0, 1], 1, 2)
    assert not oracle.in_partition_event(g, [0], [1], 2, 0)


def test_certificates_all_pass():
    results = oracle.run_certificates()
    assert [r.name for r in results] == ["graph-law", "bcm-coupling", "edge-partition", "measure-change"]
    for r in results:
        assert r.passed, r
        assert r.checks > 0 and r.max_error <= 1e-12
