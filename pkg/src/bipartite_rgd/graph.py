"""Bipartite multigraphs, traces and component queries.

Vertices are dense integer indices: left vertices ``0..L-1`` and right
vertices ``0..R-1`` live in separate namespaces.  Component queries treat
a multi-edge as a single adjacency.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


class Side(str, Enum):
    LEFT = "L"
    RIGHT = "R"

    @classmethod
    def parse(cls, value: "Side | str") -> "Side":
        if isinstance(value, Side):
            return value
        key = str(value).strip().lower()
        if key in ("l", "left"):
            return cls.LEFT
        if key in ("r", "right"):
            return cls.RIGHT
        raise ValueError(f"unknown side {value!r}; expected 'left' or 'right'")


@dataclass(frozen=True)
class Params:
    """Model parameters: attachment offsets and side sizes."""

    alpha: float
    beta: float
    left_count: int
    right_count: int

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if int(self.left_count) != self.left_count or self.left_count < 1:
            raise ValueError(f"left_count must be a positive integer, got {self.left_count}")
        if int(self.right_count) != self.right_count or self.right_count < 1:
            raise ValueError(f"right_count must be a positive integer, got {self.right_count}")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "left_count", int(self.left_count))
        object.__setattr__(self, "right_count", int(self.right_count))

    @property
    def n(self) -> int:
        return self.left_count + self.right_count

    def gamma(self) -> float:
        return self.right_count / self.left_count

    def rho(self, side) -> float:
        return self.alpha if Side.parse(side) is Side.LEFT else self.beta

    def zeta(self, side) -> float:
        g = self.gamma()
        return 1.0 + g if Side.parse(side) is Side.LEFT else 1.0 + 1.0 / g

    def size(self, side) -> int:
        return self.left_count if Side.parse(side) is Side.LEFT else self.right_count


@dataclass
class ComponentSummary:
    sizes: list[int]
    isolated_left: int
    isolated_right: int

    @property
    def is_connected(self) -> bool:
        return len(self.sizes) == 1

    @property
    def largest(self) -> int:
        return self.sizes[0] if self.sizes else 0

    @property
    def second_largest(self) -> int:
        return self.sizes[1] if len(self.sizes) > 1 else 0

    def only_singletons_outside_largest(self) -> bool:
        """True when every component except the largest is an isolated vertex."""
        return all(s == 1 for s in self.sizes[1:])


def components_from_edges(left_count: int, right_count: int, us, vs) -> ComponentSummary:
    """Component summary of the bipartite support spanned by edge arrays ``us``, ``vs``."""
    us = np.asarray(us, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    n = left_count + right_count
    left_deg = np.bincount(us, minlength=left_count)
    right_deg = np.bincount(vs, minlength=right_count)
    if us.size == 0:
        return ComponentSummary([1] * n, left_count, right_count)
    adj = coo_matrix(
        (np.ones(us.size, dtype=np.int8), (us, vs + left_count)), shape=(n, n)
    )
    _, labels = connected_components(adj, directed=False)
    sizes = np.bincount(labels)
    return ComponentSummary(
        sizes=sorted(sizes.tolist(), reverse=True),
        isolated_left=int(np.count_nonzero(left_deg == 0)),
        isolated_right=int(np.count_nonzero(right_deg == 0)),
    )


@dataclass
class BipartiteMultigraph:
    params: Params
    multiplicity: dict[tuple[int, int], int] = field(default_factory=dict)
    left_degrees: np.ndarray = None
    right_degrees: np.ndarray = None
    edge_count: int = 0

    def __post_init__(self):
        if self.left_degrees is None:
            self.left_degrees = np.zeros(self.params.left_count, dtype=np.int64)
        if self.right_degrees is None:
            self.right_degrees = np.zeros(self.params.right_count, dtype=np.int64)

    @classmethod
    def empty(cls, params: Params) -> "BipartiteMultigraph":
        return cls(params)

    @classmethod
    def from_edges(cls, params: Params, edges: Iterable[tuple[int, int]]) -> "BipartiteMultigraph":
        g = cls(params)
        for u, v in edges:
            g.add_edge(u, v)
        return g

    @classmethod
    def from_arrays(cls, params: Params, us, vs) -> "BipartiteMultigraph":
        """Bulk construction; equivalent to ``from_edges`` but vectorized."""
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        _check_range(params, us, vs)
        codes, counts = np.unique(us * params.right_count + vs, return_counts=True)
        mult = {
            (int(c // params.right_count), int(c % params.right_count)): int(k)
            for c, k in zip(codes, counts)
        }
        return cls(
            params,
            multiplicity=mult,
            left_degrees=np.bincount(us, minlength=params.left_count).astype(np.int64),
            right_degrees=np.bincount(vs, minlength=params.right_count).astype(np.int64),
            edge_count=int(us.size),
        )

    def add_edge(self, u: int, v: int) -> "BipartiteMultigraph":
        if not (0 <= u < self.params.left_count):
            raise ValueError(f"left vertex {u} out of range [0, {self.params.left_count})")
        if not (0 <= v < self.params.right_count):
            raise ValueError(f"right vertex {v} out of range [0, {self.params.right_count})")
        key = (int(u), int(v))
        self.multiplicity[key] = self.multiplicity.get(key, 0) + 1
        self.left_degrees[u] += 1
        self.right_degrees[v] += 1
        self.edge_count += 1
        return self

    def copy(self) -> "BipartiteMultigraph":
        return BipartiteMultigraph(
            self.params,
            dict(self.multiplicity),
            self.left_degrees.copy(),
            self.right_degrees.copy(),
            self.edge_count,
        )

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.multiplicity

    def is_simple(self) -> bool:
        return all(m == 1 for m in self.multiplicity.values())

    def support(self) -> list[tuple[int, int]]:
        return sorted(self.multiplicity)

    def component_summary(self) -> ComponentSummary:
        pairs = self.support()
        us = [u for u, _ in pairs]
        vs = [v for _, v in pairs]
        return components_from_edges(self.params.left_count, self.params.right_count, us, vs)

    def q_statistic(self) -> int:
        """Sum of cubed degrees over both sides."""
        return int(np.sum(self.left_degrees ** 3) + np.sum(self.right_degrees ** 3))

    def canonical(self) -> str:
        """Order-independent encoding ``u-v:m;...`` of the multigraph."""
        return ";".join(f"{u}-{v}:{m}" for (u, v), m in sorted(self.multiplicity.items()))


def _check_range(params: Params, us: np.ndarray, vs: np.ndarray):
    if us.size and (us.min() < 0 or us.max() >= params.left_count):
        raise ValueError("left vertex index out of range")
    if vs.size and (vs.min() < 0 or vs.max() >= params.right_count):
        raise ValueError("right vertex index out of range")


@dataclass
class Trace:
    """Ordered edge sequence produced by one run of a process."""

    params: Params
    edges: list[tuple[int, int]]
    simple: bool = False

    def __len__(self):
        return len(self.edges)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.edges:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        arr = np.asarray(self.edges, dtype=np.int64)
        return arr[:, 0], arr[:, 1]

    def graph(self) -> BipartiteMultigraph:
        us, vs = self.arrays()
        return BipartiteMultigraph.from_arrays(self.params, us, vs)

    def prefix_graphs(self) -> list[BipartiteMultigraph]:
        """Graphs H_0, ..., H_t along the trace."""
        g = BipartiteMultigraph.empty(self.params)
        out = [g.copy()]
        for u, v in self.edges:
            g.add_edge(u, v)
            out.append(g.copy())
        return out

    def dumps(self) -> str:
        p = self.params
        buf = io.StringIO()
        buf.write(
            f"bipartite-trace {p.left_count} {p.right_count} {len(self.edges)} "
            f"{p.alpha!r} {p.beta!r} {int(self.simple)}\n"
        )
        for u, v in self.edges:
            buf.write(f"{u} {v}\n")
        return buf.getvalue()

    @classmethod
    def loads(cls, text: str) -> "Trace":
        lines = text.splitlines()
        if not lines:
            raise ValueError("empty trace document")
        head = lines[0].split()
        if len(head) != 7 or head[0] != "bipartite-trace":
            raise ValueError(f"bad trace header: {lines[0]!r}")
        L, R, t = int(head[1]), int(head[2]), int(head[3])
        params = Params(float(head[4]), float(head[5]), L, R)
        simple = head[6] == "1"
        edges = []
        for line in lines[1:]:
            if not line.strip():
                continue
            a, b = line.split()
            edges.append((int(a), int(b)))
        if len(edges) != t:
            raise ValueError(f"header announces {t} edges, found {len(edges)}")
        return cls(params, edges, simple)


def add_edge(g: BipartiteMultigraph, u: int, v: int) -> BipartiteMultigraph:
    return g.add_edge(u, v)


def component_summary(g: BipartiteMultigraph) -> ComponentSummary:
    return g.component_summary()


def q_statistic(g: BipartiteMultigraph) -> int:
    return g.q_statistic()


def replay(params: Params, edges: Sequence[tuple[int, int]]) -> BipartiteMultigraph:
    return BipartiteMultigraph.from_edges(params, edges)
