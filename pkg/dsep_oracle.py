"""
Exact d-separation, inducing paths, D-SEP and ground-truth MAAG construction
on directed systems. Cycles are allowed throughout.

All searches are reachability over (vertex, arrived-with-arrowhead) states, so
they run in O(p * |E|) and never enumerate paths.
"""

from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, Set, Tuple

from errors import InputError
from graph_core import (
    DirectedSystem,
    EndpointMark,
    MixedGraph,
    VertexClass,
    ancestors,
)


@dataclass(frozen=True)
class DsepQuery:
    """Query "are a and b d-connected given cond"; the three sets must be disjoint."""

    a: FrozenSet[int]
    b: FrozenSet[int]
    cond: FrozenSet[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "a", frozenset(self.a))
        object.__setattr__(self, "b", frozenset(self.b))
        object.__setattr__(self, "cond", frozenset(self.cond))
        if self.a & self.b or self.a & self.cond or self.b & self.cond:
            raise InputError("d-separation query sets must be pairwise disjoint")


@dataclass
class TrueMaag:
    """MAAG over the observed vertices, with the witness flag of every edge."""

    graph: MixedGraph
    provenance: Dict[Tuple[int, int], bool] = field(default_factory=dict)
    observed: Tuple[int, ...] = ()


# =============================================================================
# d-connection
# =============================================================================


def d_connected(g: DirectedSystem, q: DsepQuery) -> bool:
    """True iff some member of q.a and some member of q.b are d-connected given q.cond.

    A walk is active when every collider on it is an ancestor of cond and no
    non-collider is in cond.
    """
    for v in q.a | q.b | q.cond:
        if not 0 <= v < g.p:
            raise InputError(f"Vertex id {v} out of range for p={g.p}")
    if not q.a or not q.b:
        return False
    cond = q.cond
    active_colliders = ancestors(g, cond) if cond else set()

    # state (v, up): up=True means we reached v against an edge (tail at v)
    seen: Set[Tuple[int, bool]] = set()
    queue = deque((s, True) for s in sorted(q.a))
    seen.update(queue)
    while queue:
        v, up = queue.popleft()
        if v in q.b:
            return True
        nxt = []
        if up:
            if v in cond:
                continue
            nxt.extend((w, True) for w in g.parents(v))
            nxt.extend((w, False) for w in g.children(v))
        else:
            if v not in cond:
                nxt.extend((w, False) for w in g.children(v))
            if v in active_colliders:
                nxt.extend((w, True) for w in g.parents(v))
        for state in nxt:
            if state not in seen:
                seen.add(state)
                queue.append(state)
    return False


def is_d_separated(g: DirectedSystem, i: int, j: int, cond: Iterable[int] = ()) -> bool:
    return not d_connected(g, DsepQuery(frozenset({i}), frozenset({j}), frozenset(cond)))


# =============================================================================
# Inducing paths
# =============================================================================


def _check_observed_pair(g: DirectedSystem, oi: int, oj: int) -> None:
    for v in (oi, oj):
        if not 0 <= v < g.p:
            raise InputError(f"Vertex id {v} out of range for p={g.p}")
        if g.labels[v] is not VertexClass.OBSERVED:
            raise InputError(f"Vertex {v} is not observed")
    if oi == oj:
        raise InputError("Inducing path endpoints must differ")


def _inducing_reach(g: DirectedSystem, oi: int, oj: int) -> Tuple[bool, bool]:
    """(any inducing path, some inducing path into oj) between oi and oj."""
    collider_ok = ancestors(g, {oi, oj} | set(g.selection))
    latent = set(g.latent)

    # state (v, arrow_at_v) for interior vertices
    seen: Set[Tuple[int, bool]] = set()
    queue: deque = deque()
    found_any = found_into = False

    def arrive(w: int, arrow: bool) -> None:
        nonlocal found_any, found_into
        if w == oj:
            found_any = True
            found_into = found_into or arrow
            return
        if w == oi or (w, arrow) in seen:
            return
        seen.add((w, arrow))
        queue.append((w, arrow))

    for w in g.children(oi):
        arrive(w, True)
    for w in g.parents(oi):
        arrive(w, False)
    while queue:
        v, arrow_in = queue.popleft()
        # leaving along v -> w puts a tail at v; along w -> v an arrowhead
        for w in g.children(v):
            if v in latent:
                arrive(w, True)
        for w in g.parents(v):
            collider = arrow_in
            if (collider and v in collider_ok) or (not collider and v in latent):
                arrive(w, False)
        if found_any and found_into:
            break
    return found_any, found_into


def inducing_path_exists(g: DirectedSystem, oi: int, oj: int) -> bool:
    """True iff a path joins oi and oj whose non-colliders are latent and whose
    colliders are ancestors of {oi, oj} ∪ S."""
    _check_observed_pair(g, oi, oj)
    return _inducing_reach(g, oi, oj)[0]


def inducing_path_into(g: DirectedSystem, oi: int, oj: int) -> bool:
    """True iff some inducing path between oi and oj has an arrowhead at oj."""
    _check_observed_pair(g, oi, oj)
    return _inducing_reach(g, oi, oj)[1]


def d_sep_set(g: DirectedSystem, oi: int, oj: int) -> Set[int]:
    """D-SEP(oi, oj): observed vertices reachable from oi by a sequence inside
    Anc({oi, oj} ∪ S) whose interior vertices each receive inducing paths,
    into them, from both sequence neighbours.

    Not symmetric in (oi, oj).
    """
    _check_observed_pair(g, oi, oj)
    observed = g.observed
    allowed = (ancestors(g, {oi, oj} | set(g.selection)) & set(observed)) - {oi, oj}
    members = sorted(allowed)
    into: Dict[Tuple[int, int], bool] = {}
    linked: Dict[Tuple[int, int], bool] = {}
    for a in [oi] + members:
        for b in members:
            if a != b:
                any_path, into_b = _inducing_reach(g, a, b)
                linked[(a, b)] = any_path
                into[(a, b)] = into_b

    # pairs (previous, current) on some admissible sequence
    seen: Set[Tuple[int, int]] = set()
    queue = deque()
    for k in members:
        if linked[(oi, k)]:
            seen.add((oi, k))
            queue.append((oi, k))
    while queue:
        prev, cur = queue.popleft()
        if not into[(prev, cur)]:
            continue
        for nxt in members:
            if nxt in (cur, prev) or (cur, nxt) in seen:
                continue
            if into[(nxt, cur)]:
                seen.add((cur, nxt))
                queue.append((cur, nxt))
    return {cur for _, cur in seen}


# =============================================================================
# Ground-truth MAAG and the oracle CI provider
# =============================================================================


def true_maag(g: DirectedSystem) -> TrueMaag:
    """MAAG over the observed vertices of g.

    Observed vertex ``observed[k]`` becomes mixed-graph vertex ``k``. Adjacency
    is the inducing-path relation; the mark at oj is an arrowhead iff oj is not
    an ancestor of {oi} ∪ S.
    """
    observed = g.observed
    if not observed:
        raise InputError("System has no observed vertices")
    sel = set(g.selection)
    anc_of = {v: ancestors(g, {v} | sel) for v in observed}
    m = MixedGraph(len(observed), [g.vertex_name(v) for v in observed])
    provenance: Dict[Tuple[int, int], bool] = {}
    for a, b in combinations(range(len(observed)), 2):
        oi, oj = observed[a], observed[b]
        if not inducing_path_exists(g, oi, oj):
            continue
        mark_i = EndpointMark.TAIL if oi in anc_of[oj] else EndpointMark.ARROW
        mark_j = EndpointMark.TAIL if oj in anc_of[oi] else EndpointMark.ARROW
        m.add_edge(a, b, mark_i, mark_j)
        provenance[(a, b)] = True
    return TrueMaag(m, provenance, observed)


def has_almost_directed_cycle(maag: TrueMaag, g: DirectedSystem) -> bool:
    """True if an arrowhead in the MAAG points at an ancestor of its other endpoint."""
    sel = set(g.selection)
    for a, b, mark_a, mark_b in maag.graph.edges():
        oa, ob = maag.observed[a], maag.observed[b]
        if mark_b is EndpointMark.ARROW and ob in ancestors(g, {oa} | sel):
            return True
        if mark_a is EndpointMark.ARROW and oa in ancestors(g, {ob} | sel):
            return True
    return False


def oracle_ci(g: DirectedSystem):
    """CI provider answering from d-separation in g, with S always conditioned."""
    from ci import OracleCi

    return OracleCi(g)


def ancestors_of_observed(g: DirectedSystem, seed: Iterable[int], with_selection: bool = True) -> Set[int]:
    """Ancestors of mixed-graph indices ``seed`` (plus S), returned as mixed-graph indices."""
    observed = g.observed
    base = {observed[k] for k in seed}
    if with_selection:
        base |= set(g.selection)
    index = {v: k for k, v in enumerate(observed)}
    return {index[v] for v in ancestors(g, base) if v in index}
