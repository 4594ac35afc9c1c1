"""Exhaustive ground truth on tiny instances.

Trajectories are enumerated depth-first and every step probability is
computed straight from the defining transition rule (weights
``(d_u + alpha)(d_v + beta)`` normalised over all pairs, or over non-adjacent
pairs for the simple process).  Nothing here calls the samplers or the
closed-form formulas in :mod:`theory`; the certificates compare the two.
"""

from __future__ import annotations

import itertools
import math
import time
from collections import defaultdict
from dataclasses import dataclass, field

from .graph import BipartiteMultigraph, Params, Trace
from .samplers import BiDegreeSequence
from . import theory

ENUMERATION_BUDGET = 10**6
BCM_MAX_EDGES = 6


class CapacityError(ValueError):
    pass


class ConditioningError(ValueError):
    pass


@dataclass
class ExactDistribution:
    """Law over multigraphs keyed by their canonical encoding."""

    probs: dict[str, float]
    graphs: dict[str, BipartiteMultigraph] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return math.fsum(self.probs.values())

    @property
    def entries(self) -> list[tuple[str, float]]:
        return sorted(self.probs.items())

    def __getitem__(self, key: str) -> float:
        return self.probs.get(key, 0.0)


def _step_weights(params: Params, left_deg, right_deg, adjacent, simple: bool):
    a, b = params.alpha, params.beta
    weights = {}
    for u in range(params.left_count):
        for v in range(params.right_count):
            if simple and (u, v) in adjacent:
                continue
            weights[(u, v)] = (left_deg[u] + a) * (right_deg[v] + b)
    norm = math.fsum(weights.values())
    return {k: w / norm for k, w in weights.items()}


def enumerate_traces(params: Params, t: int, variant: str = "multi") -> dict[tuple, float]:
    """Probability of every length-``t`` edge sequence with positive mass."""
    if variant not in ("multi", "simple"):
        raise ValueError(f"variant must be 'multi' or 'simple', got {variant!r}")
    simple = variant == "simple"
    pairs = params.left_count * params.right_count
    if pairs**t > ENUMERATION_BUDGET:
        raise CapacityError(f"(L*R)^t = {pairs**t} exceeds the budget {ENUMERATION_BUDGET}")
    if simple and t > pairs:
        raise CapacityError("simple process cannot take more steps than vertex pairs")

    out: dict[tuple, float] = {}
    left = [0] * params.left_count
    right = [0] * params.right_count
    adjacent: set = set()
    path: list = []

    def walk(prob: float):
        if len(path) == t:
            out[tuple(path)] = prob
            return
        for (u, v), q in _step_weights(params, left, right, adjacent, simple).items():
            fresh = (u, v) not in adjacent
            left[u] += 1
            right[v] += 1
            adjacent.add((u, v))
            path.append((u, v))
            walk(prob * q)
            path.pop()
            if fresh:
                adjacent.discard((u, v))
            left[u] -= 1
            right[v] -= 1

    walk(1.0)
    return out


def _aggregate(params: Params, traces: dict[tuple, float]) -> ExactDistribution:
    parts: dict[str, list[float]] = defaultdict(list)
    graphs: dict[str, BipartiteMultigraph] = {}
    for seq, p in traces.items():
        g = BipartiteMultigraph.from_edges(params, seq)
        key = g.canonical()
        parts[key].append(p)
        graphs.setdefault(key, g)
    return ExactDistribution({k: math.fsum(v) for k, v in parts.items()}, graphs)


def enumerate_process(params: Params, t: int, variant: str = "multi") -> ExactDistribution:
    return _aggregate(params, enumerate_traces(params, t, variant))


def conditional_given_bidegree(dist: ExactDistribution, deg: BiDegreeSequence) -> ExactDistribution:
    keep = {
        k: p
        for k, p in dist.probs.items()
        if list(dist.graphs[k].left_degrees) == list(deg.left)
        and list(dist.graphs[k].right_degrees) == list(deg.right)
    }
    mass = math.fsum(keep.values())
    if mass == 0:
        raise ConditioningError("bi-degree sequence has zero probability")
    return ExactDistribution({k: p / mass for k, p in keep.items()}, {k: dist.graphs[k] for k in keep})


def achievable_bidegrees(dist: ExactDistribution) -> list[BiDegreeSequence]:
    seen = {}
    for g in dist.graphs.values():
        key = (tuple(g.left_degrees.tolist()), tuple(g.right_degrees.tolist()))
        seen.setdefault(key, BiDegreeSequence(*key))
    return [seen[k] for k in sorted(seen)]


def bcm_exact_distribution(deg: BiDegreeSequence, params: Params | None = None) -> ExactDistribution:
    """All m! positional pairings of left half-edges with labelled right half-edges."""
    m = deg.total
    if m > BCM_MAX_EDGES:
        raise CapacityError(f"m={m} exceeds the BCM enumeration limit {BCM_MAX_EDGES}")
    if params is None:
        params = Params(1.0, 1.0, len(deg.left), len(deg.right))
    left = [u for u, d in enumerate(deg.left) for _ in range(d)]
    right = [v for v, d in enumerate(deg.right) for _ in range(d)]
    weight = 1.0 / math.factorial(m)
    parts: dict[str, list[float]] = defaultdict(list)
    graphs = {}
    for perm in itertools.permutations(range(m)):
        g = BipartiteMultigraph.from_edges(params, [(left[i], right[j]) for i, j in enumerate(perm)])
        key = g.canonical()
        parts[key].append(weight)
        graphs.setdefault(key, g)
    return ExactDistribution({k: math.fsum(v) for k, v in parts.items()}, graphs)


def in_partition_event(g: BipartiteMultigraph, A, B, t1: int, y: int) -> bool:
    A, B = set(A), set(B)
    if any(u in A and v not in B for u, v in g.multiplicity):
        return False
    from_a = sum(int(g.left_degrees[u]) for u in A)
    into_b = sum(int(g.right_degrees[v]) for v in B)
    return from_a == t1 and into_b == t1 + y


def event_mass(dist: ExactDistribution, A, B, t1: int, y: int) -> float:
    return math.fsum(
        p for k, p in dist.probs.items() if in_partition_event(dist.graphs[k], A, B, t1, y)
    )


def _subsets(n: int):
    for r in range(n + 1):
        yield from itertools.combinations(range(n), r)


# --- certificates ---------------------------------------------------------

CERT_GRID = [(2, 2, 2), (2, 2, 3), (2, 1, 3)]
CERT_OFFSETS = [0.5, 1.0, 2.0]


@dataclass
class CertificateResult:
    name: str
    passed: bool
    max_error: float
    checks: int
    seconds: float
    detail: str = ""


def _grid():
    for L, R, t in CERT_GRID:
        for a in CERT_OFFSETS:
            for b in CERT_OFFSETS:
                yield Params(a, b, L, R), t


def certify_graph_law(tol: float = 1e-12, mass_tol: float = 1e-10) -> CertificateResult:
    start = time.perf_counter()
    worst, checks, worst_mass = 0.0, 0, 0.0
    for params, t in _grid():
        dist = enumerate_process(params, t, "multi")
        worst_mass = max(worst_mass, abs(dist.total - 1))
        for key, p in dist.probs.items():
            q = math.exp(theory.exact_multigraph_logprob(dist.graphs[key], t))
            worst = max(worst, abs(p - q))
            checks += 1
    return CertificateResult(
        "graph-law",
        worst <= tol and worst_mass <= mass_tol,
        worst,
        checks,
        time.perf_counter() - start,
        f"max |mass-1| = {worst_mass:.2e}",
    )


def certify_bcm_coupling(tol: float = 1e-12) -> CertificateResult:
    start = time.perf_counter()
    worst, checks = 0.0, 0
    for params, t in _grid():
        dist = enumerate_process(params, t, "multi")
        for deg in achievable_bidegrees(dist):
            cond = conditional_given_bidegree(dist, deg)
            bcm = bcm_exact_distribution(deg, params)
            for key in set(cond.probs) | set(bcm.probs):
                worst = max(worst, abs(cond[key] - bcm[key]))
                checks += 1
    return CertificateResult("bcm-coupling", worst <= tol, worst, checks, time.perf_counter() - start)


def certify_edge_partition(tol: float = 1e-12) -> CertificateResult:
    start = time.perf_counter()
    worst, checks, positive_y = 0.0, 0, 0
    for params, t in _grid():
        dist = enumerate_process(params, t, "multi")
        for A in _subsets(params.left_count):
            for B in _subsets(params.right_count):
                for t1 in range(t + 1):
                    for y in range(t - t1 + 1):
                        mass = event_mass(dist, A, B, t1, y)
                        ev = theory.PartitionEvent(len(A), len(B), t1, y, t)
                        q = math.exp(theory.edge_partition_logprob(params, ev))
                        worst = max(worst, abs(mass - q))
                        checks += 1
                        positive_y += y > 0 and mass > 0
    return CertificateResult(
        "edge-partition",
        worst <= tol and positive_y > 0,
        worst,
        checks,
        time.perf_counter() - start,
        f"{positive_y} checks with y>0 and positive mass",
    )


def certify_measure_change(tol: float = 1e-12) -> CertificateResult:
    start = time.perf_counter()
    worst, checks, bound_failures = 0.0, 0, 0
    for params, t in _grid():
        if t > params.left_count * params.right_count:
            continue
        multi = enumerate_traces(params, t, "multi")
        simple = enumerate_traces(params, t, "simple")
        for seq, p_multi in multi.items():
            trace = Trace(params, list(seq))
            mc = theory.measure_change_ratio(trace.prefix_graphs(), params)
            p_simple = simple.get(seq, 0.0)
            if len(set(seq)) < len(seq):
                err = p_simple  # repeated pair: impossible for the simple process
            else:
                err = abs(p_simple - mc.exact_ratio * p_multi)
                if mc.bound_valid and mc.exact_ratio > mc.q_bound * (1 + 1e-12):
                    bound_failures += 1
            worst = max(worst, err)
            checks += 1
    return CertificateResult(
        "measure-change",
        worst <= tol and bound_failures == 0,
        worst,
        checks,
        time.perf_counter() - start,
        f"{bound_failures} bound violations",
    )


def run_certificates() -> list[CertificateResult]:
    return [
        certify_graph_law(),
        certify_bcm_coupling(),
        certify_edge_partition(),
        certify_measure_change(),
    ]
