"""Closed-form predictions for the bipartite degree-driven process.

Everything that multiplies long runs of rising factorials is evaluated in
natural-log space; ``(alpha * L)_t`` overflows a double for very small t.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammaln, xlogy

from .graph import BipartiteMultigraph, Params, Side

DEFAULT_TOL = 1e-12
MAX_ITER = 100_000
# above this length a rising factorial switches from summation to log-gamma
DIRECT_SUM_LIMIT = 1000


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class NegBin:
    """Negative binomial law NB(shape, p): mean shape * p / (1 - p)."""

    shape: float
    p: float

    def __post_init__(self):
        if not self.shape > 0:
            raise ValueError(f"shape must be > 0, got {self.shape}")
        if not (0 <= self.p < 1):
            raise ValueError(f"p must lie in [0, 1), got {self.p}")

    def logpmf(self, k):
        k = np.asarray(k, dtype=np.float64)
        a, p = self.shape, self.p
        out = gammaln(a + k) - gammaln(a) - gammaln(k + 1) + a * math.log1p(-p) + xlogy(k, p)
        return out

    def pmf(self, k):
        out = np.exp(self.logpmf(k))
        return float(out) if np.ndim(out) == 0 else out

    def pgf(self, z: float) -> float:
        return ((1 - self.p) / (1 - self.p * z)) ** self.shape

    def mean(self) -> float:
        return self.shape * self.p / (1 - self.p)

    def falling_moment(self, k: int) -> float:
        """E[Y (Y-1) ... (Y-k+1)] = mean^k * prod_{1 <= j < k} (1 + j / shape)."""
        m = self.mean()
        return m**k * math.prod(1 + j / self.shape for j in range(1, k))


def nb_pmf(nb: NegBin, k: int) -> float:
    if k < 0:
        raise ValueError("k must be non-negative")
    return nb.pmf(k)


def nb_pgf(nb: NegBin, z: float) -> float:
    if not (0 <= z <= 1):
        raise ValueError("z must lie in [0, 1]")
    return nb.pgf(z)


def nb_shifted_size_bias(nb: NegBin) -> NegBin:
    """Law of (k+1) P(Y=k+1) / E[Y]; for NB(a, p) this is NB(a+1, p)."""
    if nb.p == 0:
        raise ValueError("size-biasing a point mass at 0 is undefined (zero mean)")
    return NegBin(nb.shape + 1, nb.p)


def degree_model(params: Params, t: float, side) -> NegBin:
    side = Side.parse(side)
    if t < 0:
        raise ValueError("t must be non-negative")
    mass = params.rho(side) * params.size(side)
    return NegBin(params.rho(side), t / (t + mass))


def _k_factor(params: Params) -> float:
    return (1 + 1 / params.alpha) * (1 + 1 / params.beta)


def giant_threshold(params: Params) -> float:
    g = params.gamma()
    return math.sqrt(g) / ((g + 1) * math.sqrt(_k_factor(params)))


def supercritical_probs(params: Params, epsilon: float) -> tuple[float, float]:
    """NB success probabilities of the limiting degrees at t = t_c (1 + eps)(L + R).

    p = mu / (mu + rho) where mu = t / |side| is the mean degree on that side.
    """
    if not epsilon > -1:
        raise ValueError("epsilon must exceed -1")
    g, k = params.gamma(), _k_factor(params)
    scale = 1 + epsilon
    p_left = scale / (scale + params.alpha * math.sqrt(k / g))
    p_right = scale / (scale + params.beta * math.sqrt(k * g))
    return p_left, p_right


def printed_supercritical_probs(params: Params, epsilon: float) -> tuple[float, float]:
    """The alternative closed form with the square-root factor inverted.

    Kept only for comparison: its mean degrees do not match t / |side| and
    its critical point is not t_c.
    """
    g, k = params.gamma(), _k_factor(params)
    a = math.sqrt(k / g)
    b = math.sqrt(k * g)
    return a / (a + params.alpha / (1 + epsilon)), b / (b + params.beta / (1 + epsilon))


def _limit_laws(params: Params, epsilon: float):
    p_left, p_right = supercritical_probs(params, epsilon)
    return NegBin(params.alpha, p_left), NegBin(params.beta, p_right)


def solve_eta(params: Params, epsilon: float, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Smallest fixed point of eta -> G_{D_R shifted}(G_{D_L shifted}(eta)), iterated from 0."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    d_left, d_right = _limit_laws(params, epsilon)
    s_left, s_right = nb_shifted_size_bias(d_left), nb_shifted_size_bias(d_right)
    eta = 0.0
    for _ in range(MAX_ITER):
        nxt = s_right.pgf(s_left.pgf(eta))
        if abs(nxt - eta) < tol:
            eta = nxt
            return eta, s_left.pgf(eta)
        eta = nxt
    raise ConvergenceError(f"fixed-point iteration did not converge in {MAX_ITER} steps")


def eta_equation_residuals(params: Params, epsilon: float, eta_left: float) -> dict[str, float]:
    """Residuals of the two rearranged forms of the fixed-point equation at ``eta_left``.

    ``"eta_power"`` uses eta_L ** (-1/(beta+1)), the form obtained by
    inverting the outer pgf; ``"one_minus_eta_power"`` uses
    (1 - eta_L) ** (-1/(beta+1)).
    """
    p_left, p_right = supercritical_probs(params, epsilon)
    lhs = p_right * ((1 - p_left) / (1 - eta_left * p_left)) ** (params.alpha + 1)
    expo = -1 / (params.beta + 1)
    out = {"eta_power": lhs - (1 - (1 - p_right) * eta_left**expo)}
    if eta_left < 1:
        out["one_minus_eta_power"] = lhs - (1 - (1 - p_right) * (1 - eta_left) ** expo)
    else:
        out["one_minus_eta_power"] = math.inf
    return out


@dataclass
class GiantPrediction:
    t_c: float
    epsilon: float
    p_L: float
    p_R: float
    eta_L: float
    eta_R: float
    xi_L: float
    xi_R: float
    fraction: float

    def as_dict(self) -> dict:
        return asdict(self)


def giant_fraction(params: Params, epsilon: float, tol: float = DEFAULT_TOL) -> GiantPrediction:
    if not epsilon > 0:
        raise ValueError("giant_fraction needs a supercritical epsilon > 0")
    p_left, p_right = supercritical_probs(params, epsilon)
    eta_left, eta_right = solve_eta(params, epsilon, tol)
    xi_left = 1 - NegBin(params.alpha, p_left).pgf(eta_left)
    xi_right = 1 - NegBin(params.beta, p_right).pgf(eta_right)
    g = params.gamma()
    return GiantPrediction(
        t_c=giant_threshold(params),
        epsilon=epsilon,
        p_L=p_left,
        p_R=p_right,
        eta_L=eta_left,
        eta_R=eta_right,
        xi_L=xi_left,
        xi_R=xi_right,
        fraction=(xi_left + g * xi_right) / (1 + g),
    )


def supercriticality_margin(params: Params, t: float) -> float:
    """E[shifted D_L] * E[shifted D_R] - 1 for the degree laws after t steps."""
    left = degree_model(params, t, Side.LEFT)
    right = degree_model(params, t, Side.RIGHT)
    if left.p == 0 or right.p == 0:
        return -1.0
    return nb_shifted_size_bias(left).mean() * nb_shifted_size_bias(right).mean() - 1


def connectivity_threshold(params: Params) -> float:
    return params.n ** (1 + 1 / min(params.alpha, params.beta))


def isolated_mean(params: Params, side, x: float) -> float:
    """Poisson mean of isolated ``side`` vertices at t = x (L + R)^(1 + 1/rho(side))."""
    if not x > 0:
        raise ValueError("x must be positive")
    side = Side.parse(side)
    rho = params.rho(side)
    return (rho / x) ** rho * params.zeta(side) ** (-1 - rho)


@dataclass
class ConnectivityPrediction:
    tau: float
    x: float
    limit_prob: float
    lambda_left: float
    lambda_right: float

    def as_dict(self) -> dict:
        return asdict(self)


def connectivity_limit(params: Params, x: float) -> float:
    if not x > 0:
        raise ValueError("x must be positive")
    if math.isinf(x):
        return 1.0
    a, b = params.alpha, params.beta
    m = min(a, b)
    if a != b:
        bottleneck = Side.LEFT if a < b else Side.RIGHT
        return math.exp(-((m / x) ** m) * params.zeta(bottleneck) ** (-1 - m))
    g = params.gamma()
    return math.exp(-((a / x) ** a) * ((1 + g) ** (-1 - a) + (1 + 1 / g) ** (-1 - a)))


def connectivity_prediction(params: Params, x: float) -> ConnectivityPrediction:
    """Bundle for t = x * tau: each side's isolated mean is taken at its own scale."""
    tau = connectivity_threshold(params)
    t = x * tau
    lams = []
    for side in (Side.LEFT, Side.RIGHT):
        x_side = t / params.n ** (1 + 1 / params.rho(side))
        lams.append(isolated_mean(params, side, x_side))
    return ConnectivityPrediction(tau, x, connectivity_limit(params, x), lams[0], lams[1])


def sg_disconnect_exponent(params: Params) -> float:
    a, b = params.alpha, params.beta
    first = min(1 / (2 * (1 + a)), 1 / (2 * (1 + b)))
    second = max(min(1 / (4 + a), 1 / b), min(1 / (4 + b), 1 / a))
    return min(first, second)


def log_rising_factorial(x: float, m: int) -> float:
    """log of x (x+1) ... (x+m-1); ``(0)_m`` is 0 for m >= 1 (returns -inf)."""
    if m < 0:
        raise ValueError("m must be non-negative")
    if x < 0:
        raise ValueError("x must be non-negative")
    if m == 0:
        return 0.0
    if x == 0:
        return -math.inf
    if m > DIRECT_SUM_LIMIT:
        return float(gammaln(x + m) - gammaln(x))
    return math.fsum(math.log(x + j) for j in range(m))


def _log_factorial(k: int) -> float:
    return float(gammaln(k + 1))


def _log_binom(n: int, k: int) -> float:
    return _log_factorial(n) - _log_factorial(k) - _log_factorial(n - k)


def exact_multigraph_logprob(g: BipartiteMultigraph, t: int) -> float:
    """log P(multigraph process after t steps equals g)."""
    if g.edge_count != t:
        raise ValueError(f"graph has {g.edge_count} edges, expected t={t}")
    p = g.params
    out = -log_rising_factorial(p.alpha * p.left_count, t) - log_rising_factorial(
        p.beta * p.right_count, t
    )
    out += math.fsum(log_rising_factorial(p.alpha, int(d)) for d in g.left_degrees)
    out += math.fsum(log_rising_factorial(p.beta, int(d)) for d in g.right_degrees)
    out += _log_factorial(t) - math.fsum(_log_factorial(m) for m in g.multiplicity.values())
    return out


@dataclass(frozen=True)
class PartitionEvent:
    """Neighbourhood of a left set A stays inside a right set B.

    ``t1`` edges leave A, and B receives ``t1 + y`` edges in total.
    """

    a_size: int
    b_size: int
    t1: int
    y: int
    t: int

    def __post_init__(self):
        if min(self.a_size, self.b_size, self.t1, self.y, self.t) < 0:
            raise ValueError("event fields must be non-negative")
        if self.t1 + self.y > self.t:
            raise ValueError("t1 + y must not exceed t")


def edge_partition_logprob(params: Params, ev: PartitionEvent) -> float:
    if ev.a_size > params.left_count or ev.b_size > params.right_count:
        raise ValueError("partition sets exceed the side sizes")
    a, b = params.alpha, params.beta
    L, R = params.left_count, params.right_count
    t, t1, y = ev.t, ev.t1, ev.y
    terms = [
        _log_binom(t, t1),
        _log_binom(t - t1, y),
        log_rising_factorial(ev.a_size * a, t1),
        log_rising_factorial((L - ev.a_size) * a, t - t1),
        -log_rising_factorial(a * L, t),
        log_rising_factorial(ev.b_size * b, t1 + y),
        log_rising_factorial((R - ev.b_size) * b, t - t1 - y),
        -log_rising_factorial(b * R, t),
    ]
    if any(x == -math.inf for x in terms):
        return -math.inf
    return math.fsum(terms)


@dataclass
class MeasureChange:
    exact_ratio: float
    q_bound: float
    bound_valid: bool


def measure_change_ratio(graphs: list[BipartiteMultigraph], params: Params) -> MeasureChange:
    """Likelihood ratio of a graph path under the simple vs the multigraph dynamics.

    ``graphs`` is H_0 (empty), ..., H_t.  The cubic-degree bound is reported
    as invalid (``bound_valid=False``, ``q_bound=inf``) when one of its
    factors is non-positive.
    """
    if not graphs or graphs[0].edge_count != 0:
        raise ValueError("graph path must start from the empty graph")
    a, b = params.alpha, params.beta
    eta = a * a + b * b
    left = np.zeros(params.left_count, dtype=np.int64)
    right = np.zeros(params.right_count, dtype=np.int64)
    support_u: list[int] = []
    support_v: list[int] = []
    seen: set[tuple[int, int]] = set()
    log_ratio = 0.0
    log_bound = 0.0
    valid = True
    for i, nxt in enumerate(graphs[1:]):
        if nxt.edge_count != i + 1:
            raise ValueError("consecutive graphs must differ by exactly one edge")
        total = (i + a * params.left_count) * (i + b * params.right_count)
        us, vs = np.asarray(support_u, dtype=np.int64), np.asarray(support_v, dtype=np.int64)
        occupied = float(np.sum((left[us] + a) * (right[vs] + b)))
        log_ratio -= math.log1p(-occupied / total)
        q = int(np.sum(left**3) + np.sum(right**3))
        factor = 1 - 4 * (q + eta * i) / total
        if factor <= 0:
            valid = False
        else:
            log_bound -= math.log(factor)
        # locate the added edge from the degree increments
        du = np.flatnonzero(nxt.left_degrees != left)
        dv = np.flatnonzero(nxt.right_degrees != right)
        if du.size != 1 or dv.size != 1:
            raise ValueError("consecutive graphs must differ by exactly one edge")
        u, v = int(du[0]), int(dv[0])
        left[u] += 1
        right[v] += 1
        if (u, v) not in seen:
            seen.add((u, v))
            support_u.append(u)
            support_v.append(v)
    return MeasureChange(math.exp(log_ratio), math.exp(log_bound) if valid else math.inf, valid)
