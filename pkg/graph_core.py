"""
Directed and mixed graph representations plus the structural queries used by
every other module: ancestry, unshielded triples and potentially
undirected paths.

Vertex identity is positional: vertices are dense indices 0..p-1 and all
iteration is in ascending index order. Names are display metadata only.
"""

from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np

from errors import InputError


# =============================================================================
# Vertex classes and endpoint marks
# =============================================================================


class VertexClass(str, Enum):
    """Partition label of a vertex in a directed system."""

    OBSERVED = "O"
    LATENT = "L"
    SELECTION = "S"

    @classmethod
    def from_symbol(cls, symbol: str) -> "VertexClass":
        try:
            return cls(symbol.strip().upper())
        except ValueError:
            raise InputError(f"Unknown vertex label {symbol!r}; expected one of O, L, S") from None


class EndpointMark(str, Enum):
    """Mark at one end of a mixed-graph edge."""

    TAIL = "-"
    ARROW = ">"
    CIRCLE = "o"

    @classmethod
    def from_symbol(cls, symbol: str) -> "EndpointMark":
        try:
            return cls(symbol.strip())
        except ValueError:
            raise InputError(f"Unknown endpoint mark {symbol!r}; expected one of -, >, o") from None


# Marks allowed on a potentially undirected edge
UNDIRECTABLE = frozenset({EndpointMark.TAIL, EndpointMark.CIRCLE})


# =============================================================================
# DirectedSystem: ground-truth directed graph, cycles allowed
# =============================================================================


@dataclass(frozen=True)
class DirectedSystem:
    """Directed graph over O ∪ L ∪ S with an optional coefficient matrix.

    ``coeffs[j][i]`` is the coefficient of ``i -> j``; its support must equal the
    edge set.
    """

    p: int
    edges: FrozenSet[Tuple[int, int]]
    labels: Tuple[VertexClass, ...]
    coeffs: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    names: Optional[Tuple[str, ...]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.p < 0:
            raise InputError(f"Vertex count must be non-negative, got {self.p}")
        object.__setattr__(self, "edges", frozenset((int(i), int(j)) for i, j in self.edges))
        object.__setattr__(self, "labels", tuple(VertexClass(lbl) for lbl in self.labels))
        if len(self.labels) != self.p:
            raise InputError(f"Expected {self.p} vertex labels, got {len(self.labels)}")
        for i, j in self.edges:
            if not (0 <= i < self.p and 0 <= j < self.p):
                raise InputError(f"Edge {i} -> {j} out of range for p={self.p}")
            if i == j:
                raise InputError(f"Self-loop at vertex {i} is not allowed")
        if self.names is not None:
            object.__setattr__(self, "names", tuple(str(n) for n in self.names))
            if len(self.names) != self.p:
                raise InputError(f"Expected {self.p} vertex names, got {len(self.names)}")
        if self.coeffs is not None:
            coeffs = np.asarray(self.coeffs, dtype=float)
            if coeffs.shape != (self.p, self.p):
                raise InputError(f"Coefficient matrix must be {self.p}x{self.p}, got {coeffs.shape}")
            support = {(int(i), int(j)) for j, i in zip(*np.nonzero(coeffs))}
            if support != set(self.edges):
                raise InputError("Coefficient support does not match the edge set")
            coeffs.setflags(write=False)
            object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_coeffs(
        cls,
        coeffs: np.ndarray,
        labels: Optional[Sequence[VertexClass]] = None,
        names: Optional[Sequence[str]] = None,
    ) -> "DirectedSystem":
        """Build a system whose edges are the nonzero entries of ``coeffs``."""
        coeffs = np.asarray(coeffs, dtype=float)
        p = coeffs.shape[0]
        edges = {(int(i), int(j)) for j, i in zip(*np.nonzero(coeffs))}
        labels = tuple(labels) if labels is not None else (VertexClass.OBSERVED,) * p
        return cls(p, frozenset(edges), labels, coeffs, tuple(names) if names else None)

    @cached_property
    def _parents(self) -> Tuple[Tuple[int, ...], ...]:
        out: List[List[int]] = [[] for _ in range(self.p)]
        for i, j in self.edges:
            out[j].append(i)
        return tuple(tuple(sorted(ps)) for ps in out)

    @cached_property
    def _children(self) -> Tuple[Tuple[int, ...], ...]:
        out: List[List[int]] = [[] for _ in range(self.p)]
        for i, j in self.edges:
            out[i].append(j)
        return tuple(tuple(sorted(cs)) for cs in out)

    def parents(self, v: int) -> Tuple[int, ...]:
        return self._parents[v]

    def children(self, v: int) -> Tuple[int, ...]:
        return self._children[v]

    def vertices_of(self, cls: VertexClass) -> Tuple[int, ...]:
        return tuple(v for v in range(self.p) if self.labels[v] == cls)

    @property
    def observed(self) -> Tuple[int, ...]:
        return self.vertices_of(VertexClass.OBSERVED)

    @property
    def latent(self) -> Tuple[int, ...]:
        return self.vertices_of(VertexClass.LATENT)

    @property
    def selection(self) -> Tuple[int, ...]:
        return self.vertices_of(VertexClass.SELECTION)

    def vertex_name(self, v: int) -> str:
        if self.names is not None:
            return self.names[v]
        return f"{self.labels[v].value}{v}"

    def observed_names(self) -> List[str]:
        return [self.vertex_name(v) for v in self.observed]

    def with_labels(self, labels: Sequence[VertexClass]) -> "DirectedSystem":
        """Copy of this system with a new partition."""
        return replace(self, labels=tuple(labels))

    def reversed(self) -> "DirectedSystem":
        """Same vertices with every edge reversed (coefficients dropped)."""
        return DirectedSystem(self.p, frozenset((j, i) for i, j in self.edges), self.labels, None, self.names)

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.p))
        g.add_edges_from(sorted(self.edges))
        return g

    def has_cycle(self) -> bool:
        return not nx.is_directed_acyclic_graph(self.to_networkx())


def _check_vertices(p: int, vertices: Iterable[int]) -> Set[int]:
    out = set()
    for v in vertices:
        if not isinstance(v, (int, np.integer)) or not 0 <= v < p:
            raise InputError(f"Vertex id {v!r} out of range for p={p}")
        out.add(int(v))
    return out


def _reach(seed: Set[int], step) -> Set[int]:
    seen = set(seed)
    queue = deque(sorted(seed))
    while queue:
        v = queue.popleft()
        for w in step(v):
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def ancestors(g: DirectedSystem, seed: Iterable[int]) -> Set[int]:
    """All vertices with a directed path into ``seed``, seed included."""
    return _reach(_check_vertices(g.p, seed), g.parents)


def descendants(g: DirectedSystem, seed: Iterable[int]) -> Set[int]:
    """All vertices reachable by a directed path from ``seed``, seed included."""
    return _reach(_check_vertices(g.p, seed), g.children)


# =============================================================================
# MixedGraph: partially oriented graph over the observed vertices
# =============================================================================


class MixedGraph:
    """Mixed graph with tail/arrow/circle endpoint marks.

    ``mark(u, v)`` is the mark at ``v`` on the edge between ``u`` and ``v``, so
    ``mark(u, v) is ARROW`` reads as ``u *-> v``.
    """

    def __init__(self, p_obs: int, names: Optional[Sequence[str]] = None):
        if p_obs < 0:
            raise InputError(f"Vertex count must be non-negative, got {p_obs}")
        self.p_obs = p_obs
        self.names = tuple(names) if names is not None else None
        if self.names is not None and len(self.names) != p_obs:
            raise InputError(f"Expected {p_obs} vertex names, got {len(self.names)}")
        self._marks: Dict[Tuple[int, int], List[EndpointMark]] = {}
        self._adj: List[Set[int]] = [set() for _ in range(p_obs)]

    @classmethod
    def complete(cls, p_obs: int, mark: EndpointMark = EndpointMark.CIRCLE, names=None) -> "MixedGraph":
        m = cls(p_obs, names)
        for i, j in combinations(range(p_obs), 2):
            m.add_edge(i, j, mark, mark)
        return m

    def _check(self, v: int) -> None:
        if not 0 <= v < self.p_obs:
            raise InputError(f"Vertex id {v} out of range for p={self.p_obs}")

    def vertex_name(self, v: int) -> str:
        return self.names[v] if self.names is not None else f"O{v}"

    def add_edge(self, i: int, j: int, mark_i: EndpointMark, mark_j: EndpointMark) -> None:
        self._check(i)
        self._check(j)
        if i == j:
            raise InputError(f"Self-loop at vertex {i} is not allowed")
        if j in self._adj[i]:
            raise InputError(f"Duplicate edge between {i} and {j}")
        if i < j:
            self._marks[(i, j)] = [EndpointMark(mark_i), EndpointMark(mark_j)]
        else:
            self._marks[(j, i)] = [EndpointMark(mark_j), EndpointMark(mark_i)]
        self._adj[i].add(j)
        self._adj[j].add(i)

    def remove_edge(self, i: int, j: int) -> None:
        key = (min(i, j), max(i, j))
        if key not in self._marks:
            raise InputError(f"No edge between {i} and {j}")
        del self._marks[key]
        self._adj[i].discard(j)
        self._adj[j].discard(i)

    def adjacent(self, i: int, j: int) -> bool:
        return j in self._adj[i]

    def neighbors(self, v: int) -> List[int]:
        return sorted(self._adj[v])

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def marks(self, i: int, j: int) -> Tuple[EndpointMark, EndpointMark]:
        """(mark at i, mark at j) for the edge {i, j}."""
        if i < j:
            pair = self._marks.get((i, j))
            if pair is None:
                raise InputError(f"No edge between {i} and {j}")
            return pair[0], pair[1]
        pair = self._marks.get((j, i))
        if pair is None:
            raise InputError(f"No edge between {i} and {j}")
        return pair[1], pair[0]

    def mark(self, u: int, v: int) -> EndpointMark:
        """Mark at v on the edge u *-* v."""
        return self.marks(u, v)[1]

    def set_mark(self, u: int, v: int, mark: EndpointMark) -> None:
        """Set the mark at v on the edge u *-* v."""
        key = (min(u, v), max(u, v))
        pair = self._marks.get(key)
        if pair is None:
            raise InputError(f"No edge between {u} and {v}")
        pair[0 if v < u else 1] = EndpointMark(mark)

    def reset_marks(self, mark: EndpointMark = EndpointMark.CIRCLE) -> None:
        for pair in self._marks.values():
            pair[0] = pair[1] = mark

    def edges(self) -> List[Tuple[int, int, EndpointMark, EndpointMark]]:
        """All edges as (i, j, mark at i, mark at j) with i < j, sorted."""
        return [(i, j, pair[0], pair[1]) for (i, j), pair in sorted(self._marks.items())]

    def edge_pairs(self) -> List[Tuple[int, int]]:
        return sorted(self._marks)

    def edge_count(self) -> int:
        return len(self._marks)

    def copy(self) -> "MixedGraph":
        m = MixedGraph(self.p_obs, self.names)
        for i, j, mi, mj in self.edges():
            m.add_edge(i, j, mi, mj)
        return m

    def __eq__(self, other) -> bool:
        if not isinstance(other, MixedGraph):
            return NotImplemented
        return self.p_obs == other.p_obs and self.edges() == other.edges()

    def __repr__(self) -> str:
        body = ", ".join(f"{i}{mi.value}{mj.value}{j}" for i, j, mi, mj in self.edges())
        return f"MixedGraph(p_obs={self.p_obs}, [{body}])"


@dataclass(frozen=True)
class Path:
    """Simple path: consecutive vertices adjacent, no vertex visited twice."""

    vertices: Tuple[int, ...]

    @property
    def steps(self) -> List[Tuple[int, int]]:
        return list(zip(self.vertices, self.vertices[1:]))

    def __len__(self) -> int:
        return len(self.vertices)


# =============================================================================
# Structural predicates
# =============================================================================


def unshielded_triples(m: MixedGraph) -> List[Tuple[int, int, int]]:
    """All (i, j, k), i < k, with i~j~k and i, k non-adjacent, in lexicographic order."""
    out = []
    for j in range(m.p_obs):
        for i, k in combinations(m.neighbors(j), 2):
            if not m.adjacent(i, k):
                out.append((i, j, k))
    out.sort()
    return out


def is_undirectable(m: MixedGraph, u: int, v: int) -> bool:
    """True when both marks of the edge u-v are tails or circles."""
    mu, mv = m.marks(u, v)
    return mu in UNDIRECTABLE and mv in UNDIRECTABLE


def potentially_undirected_path_exists(
    m: MixedGraph, a: int, b: int, excluded: Iterable[int] = ()
) -> bool:
    """True iff a path a ... b avoiding ``excluded`` uses only tail/circle marks."""
    if a == b:
        raise InputError("Path endpoints must differ")
    banned = set(excluded)
    seen = {a}
    queue = deque([a])
    while queue:
        v = queue.popleft()
        for w in m.neighbors(v):
            if w in seen or w in banned or not is_undirectable(m, v, w):
                continue
            if w == b:
                return True
            seen.add(w)
            queue.append(w)
    return False


def potentially_undirected_paths(
    m: MixedGraph, a: int, b: int, excluded: Iterable[int] = (), limit: Optional[int] = None
) -> List[Path]:
    """Simple potentially undirected paths from a to b, at most ``limit`` of them."""
    if a == b:
        raise InputError("Path endpoints must differ")
    banned = set(excluded)
    found: List[Path] = []

    def extend(path: List[int], on_path: Set[int]) -> bool:
        v = path[-1]
        for w in m.neighbors(v):
            if w in on_path or w in banned or not is_undirectable(m, v, w):
                continue
            if w == b:
                found.append(Path(tuple(path) + (b,)))
                if limit is not None and len(found) >= limit:
                    return True
                continue
            path.append(w)
            on_path.add(w)
            if extend(path, on_path):
                return True
            path.pop()
            on_path.discard(w)
        return False

    extend([a], {a})
    return found


def iter_ordered_pairs(p: int) -> Iterator[Tuple[int, int]]:
    """All (i, j), i != j, in lexicographic order."""
    for i in range(p):
        for j in range(p):
            if i != j:
                yield i, j
