"""Seed-deterministic samplers for the multigraph and simple-graph dynamics.

Both sides of the multigraph process are Pólya urns: given the first ``i``
left endpoints, the next one is ``u`` with probability
``(count(u) + alpha) / (i + alpha * L)``.  The samplers realise this by the
copy trick: with probability ``i / (i + alpha * L)`` repeat a uniformly
chosen earlier entry, otherwise draw a fresh uniform vertex.

RNG contract: every public sampler takes ``seed`` (an int, ``None`` or a
``numpy.random.Generator``) and uses a PCG64 generator.  Replica ``r`` of a
campaign with master seed ``m`` runs with :func:`replica_seed` ``(m, r)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import BipartiteMultigraph, Params, Side, Trace

# consecutive rejections before the exact acceptance rate is computed
REJECTION_PROBE = 64
# below this acceptance rate the simple sampler enumerates free pairs
MIN_ACCEPTANCE = 1e-3


def make_rng(seed=None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def replica_seed(master_seed: int, replica: int) -> int:
    """Seed of replica ``replica``: first 64-bit word of SeedSequence([master, replica])."""
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1), int(replica)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class UniformStream:
    """Buffered scalar uniforms in [0, 1) drawn from a Generator in blocks."""

    def __init__(self, seed=None, block: int = 4096):
        self.rng = make_rng(seed)
        self.block = block
        self._buf = self.rng.random(block)
        self._pos = 0

    def next(self) -> float:
        if self._pos == self.block:
            self._buf = self.rng.random(self.block)
            self._pos = 0
        x = self._buf[self._pos]
        self._pos += 1
        return float(x)

    def index(self, n: int) -> int:
        return min(int(self.next() * n), n - 1)


@dataclass
class UrnState:
    params: Params
    step: int = 0
    left_history: list[int] = field(default_factory=list)
    right_history: list[int] = field(default_factory=list)


@dataclass
class BiDegreeSequence:
    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)
        if (self.left < 0).any() or (self.right < 0).any():
            raise ValueError("degrees must be non-negative")
        if self.left.sum() != self.right.sum():
            raise ValueError(
                f"left degrees sum to {self.left.sum()} but right degrees sum to {self.right.sum()}"
            )

    @property
    def total(self) -> int:
        return int(self.left.sum())

    @classmethod
    def of(cls, g: BipartiteMultigraph) -> "BiDegreeSequence":
        return cls(g.left_degrees.copy(), g.right_degrees.copy())


@dataclass
class StoppingBounds:
    lower: float
    upper: float
    slack: float
    failure_bound: float


def _draw_endpoint(history: list[int], offset_mass: float, size: int, stream: UniformStream) -> int:
    i = len(history)
    if stream.next() * (i + offset_mass) < i:
        return history[stream.index(i)]
    return stream.index(size)


def multigraph_step(state: UrnState, stream: UniformStream) -> tuple[int, int]:
    """Advance the urn pair by one draw and return the new edge."""
    p = state.params
    u = _draw_endpoint(state.left_history, p.alpha * p.left_count, p.left_count, stream)
    v = _draw_endpoint(state.right_history, p.beta * p.right_count, p.right_count, stream)
    state.left_history.append(u)
    state.right_history.append(v)
    state.step += 1
    return u, v


def multigraph_step_law(state: UrnState) -> tuple[np.ndarray, np.ndarray]:
    """Marginal laws of the next left and right endpoints under the copy trick.

    Mixture of "copy a uniform history entry" and "fresh uniform vertex".
    """
    p = state.params
    out = []
    for hist, mass, size in (
        (state.left_history, p.alpha * p.left_count, p.left_count),
        (state.right_history, p.beta * p.right_count, p.right_count),
    ):
        i = len(hist)
        law = np.full(size, (mass / (i + mass)) / size)
        if i:
            law += (i / (i + mass)) * np.bincount(hist, minlength=size) / i
        out.append(law)
    return out[0], out[1]


def urn_sequence(size: int, offset: float, t: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``t`` successive Pólya-urn picks over ``size`` items with per-item offset ``offset``.

    Vectorised copy trick: each copy step points at a uniform earlier step,
    and pointer chains are collapsed by repeated ``ptr = ptr[ptr]``.
    """
    # one child stream per role keeps a run of length k a prefix of any longer run
    copy_rng, target_rng, fresh_rng = rng.spawn(3)
    if t == 0:
        return np.zeros(0, dtype=np.int64)
    mass = offset * size
    steps = np.arange(t, dtype=np.float64)
    copy = copy_rng.random(t) * (steps + mass) < steps
    target = np.floor(target_rng.random(t) * steps).astype(np.int64)
    fresh = fresh_rng.integers(0, size, t)
    ptr = np.where(copy, target, np.arange(t, dtype=np.int64))
    while True:
        nxt = ptr[ptr]
        if np.array_equal(nxt, ptr):
            break
        ptr = nxt
    return fresh[ptr]


def sample_multigraph_arrays(params: Params, t: int, seed=None) -> tuple[np.ndarray, np.ndarray]:
    """Left and right endpoint arrays of ``t`` steps of the multigraph process."""
    if t < 0:
        raise ValueError("t must be non-negative")
    rng = make_rng(seed)
    us = urn_sequence(params.left_count, params.alpha, t, rng)
    vs = urn_sequence(params.right_count, params.beta, t, rng)
    return us, vs


def sample_multigraph_process(params: Params, t: int, seed=None) -> Trace:
    us, vs = sample_multigraph_arrays(params, t, seed)
    return Trace(params, list(zip(us.tolist(), vs.tolist())), simple=False)


def sample_multigraph_sequential(params: Params, t: int, seed=None) -> Trace:
    """Same law as :func:`sample_multigraph_process`, one ``multigraph_step`` at a time."""
    state = UrnState(params)
    stream = UniformStream(seed)
    edges = [multigraph_step(state, stream) for _ in range(t)]
    return Trace(params, edges, simple=False)


class _SimpleSampler:
    """Rejection sampler for the simple process with an enumeration fallback."""

    def __init__(self, params: Params, stream: UniformStream):
        self.p = params
        self.stream = stream
        self.state = UrnState(params)
        self.adjacent: set[tuple[int, int]] = set()
        self.enumerating = False
        self._free = None

    def acceptance(self) -> float:
        p = self.p
        i = self.state.step
        if i == 0:
            return 1.0
        us = np.asarray(self.state.left_history)
        vs = np.asarray(self.state.right_history)
        wl = np.bincount(us, minlength=p.left_count) + p.alpha
        wr = np.bincount(vs, minlength=p.right_count) + p.beta
        occupied = float(np.sum(wl[us] * wr[vs]))
        return 1.0 - occupied / ((i + p.alpha * p.left_count) * (i + p.beta * p.right_count))

    def _enumerate(self) -> tuple[int, int]:
        p = self.p
        if self._free is None:
            self._free = np.ones((p.left_count, p.right_count), dtype=bool)
            for u, v in self.adjacent:
                self._free[u, v] = False
        wl = np.bincount(self.state.left_history, minlength=p.left_count) + p.alpha
        wr = np.bincount(self.state.right_history, minlength=p.right_count) + p.beta
        w = (np.outer(wl, wr) * self._free).ravel()
        cum = np.cumsum(w)
        k = int(np.searchsorted(cum, self.stream.next() * cum[-1], side="right"))
        k = min(k, w.size - 1)
        while w[k] == 0:  # guard against landing on a zero-width slot at the top edge
            k -= 1
        return divmod(k, p.right_count)

    def step(self) -> tuple[int, int]:
        p = self.p
        s = self.state
        if not self.enumerating:
            rejections = 0
            while True:
                u = _draw_endpoint(s.left_history, p.alpha * p.left_count, p.left_count, self.stream)
                v = _draw_endpoint(s.right_history, p.beta * p.right_count, p.right_count, self.stream)
                if (u, v) not in self.adjacent:
                    break
                rejections += 1
                if rejections % REJECTION_PROBE == 0 and self.acceptance() < MIN_ACCEPTANCE:
                    self.enumerating = True
                    break
        if self.enumerating:
            u, v = self._enumerate()
        self.adjacent.add((u, v))
        if self._free is not None:
            self._free[u, v] = False
        s.left_history.append(u)
        s.right_history.append(v)
        s.step += 1
        return u, v


def simple_step_law(params: Params, edges: list[tuple[int, int]]) -> dict[tuple[int, int], float]:
    """Law of the next simple-process edge implied by the rejection mechanism.

    Each attempt lands on pair (u, v) with the product urn law q(u, v); the
    accepted pair has law q restricted to free pairs divided by the free
    mass (the geometric series over rejections).
    """
    state = UrnState(params, len(edges), [u for u, _ in edges], [v for _, v in edges])
    left, right = multigraph_step_law(state)
    taken = set(edges)
    free = {
        (u, v): left[u] * right[v]
        for u in range(params.left_count)
        for v in range(params.right_count)
        if (u, v) not in taken
    }
    mass = sum(free.values())
    return {k: q / mass for k, q in free.items()}


def sample_simple_process(params: Params, t: int, seed=None) -> Trace:
    if t < 0:
        raise ValueError("t must be non-negative")
    if t > params.left_count * params.right_count:
        raise ValueError(
            f"t={t} exceeds the number of vertex pairs {params.left_count * params.right_count}"
        )
    sampler = _SimpleSampler(params, UniformStream(seed))
    edges = [sampler.step() for _ in range(t)]
    return Trace(params, edges, simple=True)


def sample_simple_arrays(params: Params, t: int, seed=None) -> tuple[np.ndarray, np.ndarray]:
    trace = sample_simple_process(params, t, seed)
    return trace.arrays()


def bcm_pairings(deg: BiDegreeSequence, count: int, seed=None) -> np.ndarray:
    """``count`` independent uniform arrangements of the right half-edges.

    Row ``k`` pairs left half-edge ``i`` (left vertices repeated by degree,
    in index order) with right vertex ``row[i]``.
    """
    rng = make_rng(seed)
    right = np.repeat(np.arange(deg.right.size), deg.right)
    return rng.permuted(np.tile(right, (count, 1)), axis=1)


def sample_bcm(deg: BiDegreeSequence, seed=None, params: Params | None = None) -> BipartiteMultigraph:
    """Bipartite configuration model: pair left half-edges with a uniform shuffle of right ones."""
    if not isinstance(deg, BiDegreeSequence):
        deg = BiDegreeSequence(*deg)
    left = np.repeat(np.arange(deg.left.size), deg.left)
    right = bcm_pairings(deg, 1, seed)[0]
    if params is None:
        params = Params(1.0, 1.0, deg.left.size, deg.right.size)
    return BipartiteMultigraph.from_arrays(params, left, right)


@dataclass
class BirthEmbedding:
    degrees: np.ndarray
    tau: float


def _exp_interarrivals(rng: np.random.Generator, rates: np.ndarray) -> np.ndarray:
    # inverse CDF of Exp(rate)
    return -np.log1p(-rng.random(rates.size)) / rates


def sample_birth_embedding(params: Params, side, t: int, seed=None) -> BirthEmbedding:
    """Run the superposed pure-birth processes of one side until the ``t``-th birth.

    After ``i`` births the total rate is ``i + rho * size``; who gives birth
    follows the urn law, independently of the holding times.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    side = Side.parse(side)
    rho, size = params.rho(side), params.size(side)
    rng = make_rng(seed)
    picks = urn_sequence(size, rho, t, rng)
    rates = np.arange(t, dtype=np.float64) + rho * size
    tau = float(np.sum(_exp_interarrivals(rng, rates)))
    return BirthEmbedding(np.bincount(picks, minlength=size), tau)


def birth_counts_at_time(params: Params, side, r: float, seed=None) -> np.ndarray:
    """Per-vertex birth counts of one side at clock time ``r``."""
    side = Side.parse(side)
    rho, size = params.rho(side), params.size(side)
    rng = make_rng(seed)
    mass = rho * size
    clock = 0.0
    births = 0
    chunk = max(256, int(1.2 * mass * math.expm1(r)) + 16)
    while True:
        rates = np.arange(births, births + chunk, dtype=np.float64) + mass
        times = clock + np.cumsum(_exp_interarrivals(rng, rates))
        over = np.searchsorted(times, r, side="right")
        if over < chunk:
            births += int(over)
            break
        births += chunk
        clock = float(times[-1])
    picks = urn_sequence(size, rho, births, rng)
    return np.bincount(picks, minlength=size)


def default_slack(params: Params, t: int) -> float:
    return t * params.n ** -0.25


def stopping_time_bounds(params: Params, side, t: int, s: float | None = None) -> StoppingBounds:
    """Window ``log(1 + (t -/+ s) / (rho * size))`` for the clock of the ``t``-th birth."""
    side = Side.parse(side)
    if s is None:
        s = default_slack(params, t)
    if not (0 < s <= t):
        raise ValueError(f"slack must satisfy 0 < s <= t, got s={s}, t={t}")
    scale = params.rho(side) * params.size(side)
    lower = math.log1p((t - s) / scale)
    upper = math.log1p((t + s) / scale)
    failure = (4.0 / s**2) * (t**2 / scale + t)
    return StoppingBounds(lower, upper, float(s), failure)
