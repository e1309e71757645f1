"""
Step 7 orientation rules (R1-R7) and the potential 2-triangulation test they
depend on.

Rules read and write the discovery state duck-typed: ``state.graph`` (a
MixedGraph), ``state.seps`` (a SepStore) and ``state.orient(...)``. Every rule
returns True when it changed at least one mark.
"""

from collections import deque
from itertools import combinations
from typing import Dict, List, Optional, Set, Tuple

from errors import InputError
from graph_core import (
    EndpointMark,
    MixedGraph,
    is_undirectable,
    potentially_undirected_path_exists,
    potentially_undirected_paths,
)

ARROW = EndpointMark.ARROW
TAIL = EndpointMark.TAIL
CIRCLE = EndpointMark.CIRCLE

STEP = 7


# =============================================================================
# Potential 2-triangulation
# =============================================================================


def potential_2_triangulation_witnesses(g: MixedGraph, i: int, j: int, k: int) -> List[int]:
    """Witnesses l making edge (i, j) potentially 2-triangulated w.r.t. k.

    l qualifies when {i, j, l} is a triangle, both marks on j-l are tails or
    circles, the mark at l on i-l is an arrowhead or a circle, and a potentially
    undirected path from l to k avoids j.
    """
    if not g.adjacent(i, j):
        raise InputError(f"No edge between {i} and {j}")
    out = []
    for l in g.neighbors(i):
        if l in (j, k) or not g.adjacent(j, l):
            continue
        if not is_undirectable(g, j, l):
            continue
        if g.mark(i, l) not in (ARROW, CIRCLE):
            continue
        if not potentially_undirected_path_exists(g, l, k, excluded={j}):
            continue
        out.append(l)
    return out


def is_potentially_2_triangulated(g: MixedGraph, i: int, j: int, k: int) -> bool:
    return bool(potential_2_triangulation_witnesses(g, i, j, k))


class _P2TCache:
    """Memo of p2t answers for one unchanged graph."""

    def __init__(self, g: MixedGraph):
        self.g = g
        self._memo: Dict[Tuple[int, int, int], bool] = {}

    def __call__(self, i: int, j: int, k: int) -> bool:
        key = (i, j, k)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._memo[key] = is_potentially_2_triangulated(self.g, i, j, k)
        return hit


def _non_v_structure(state, a: int, b: int, c: int) -> bool:
    """Unshielded triple a-b-c whose middle vertex is in the stored Sep(a, c)."""
    return not state.graph.adjacent(a, c) and state.seps.in_sep(a, c, b)


def _non_p2t_path_exists(state, prefix: List[int], target: int, p2t: _P2TCache) -> bool:
    """Whether ``prefix`` extends to a non-potentially-2-triangulated path ending at target.

    Every inner triple must be a non-v-structure; every edge (u, v) followed by
    an inner vertex w must not be p2t w.r.t. w.
    """
    g = state.graph
    on_path = set(prefix)

    def extend(path: List[int]) -> bool:
        u, v = path[-2], path[-1]
        for w in g.neighbors(v):
            if w in on_path:
                continue
            if not _non_v_structure(state, u, v, w):
                continue
            if w == target:
                return True
            if p2t(u, v, w):
                continue
            path.append(w)
            on_path.add(w)
            if extend(path):
                return True
            path.pop()
            on_path.discard(w)
        return False

    if prefix[-1] == target:
        return True
    return extend(list(prefix))


# =============================================================================
# Tail reachability
# =============================================================================


def _tail_reach_from(g: MixedGraph, x: int) -> Set[int]:
    """Vertices reachable from x along edges u-v with a tail at u (x included)."""
    seen = {x}
    queue = deque([x])
    while queue:
        u = queue.popleft()
        for v in g.neighbors(u):
            if v not in seen and g.mark(v, u) is TAIL:
                seen.add(v)
                queue.append(v)
    return seen


def _tail_reach_to(g: MixedGraph, y: int) -> Set[int]:
    """Vertices with a tail walk into y (y included)."""
    seen = {y}
    queue = deque([y])
    while queue:
        v = queue.popleft()
        for u in g.neighbors(v):
            if u not in seen and g.mark(v, u) is TAIL:
                seen.add(u)
                queue.append(u)
    return seen


# =============================================================================
# Rules
# =============================================================================


def rule1(state) -> bool:
    """i *-> j o-* k, i and k non-adjacent: tail at j; arrowhead at k unless (i, j) is p2t w.r.t. k."""
    g = state.graph
    changed = False
    for j in range(g.p_obs):
        for i in g.neighbors(j):
            if g.mark(i, j) is not ARROW:
                continue
            for k in g.neighbors(j):
                if k == i or g.adjacent(i, k) or not state.seps.in_sep(i, k, j):
                    continue
                why = f"{state.name(i)} *-> {state.name(j)}, {state.name(i)} and {state.name(k)} non-adjacent"
                if g.mark(k, j) is CIRCLE:
                    changed |= state.orient(k, j, TAIL, STEP, "R1", why)
                if (g.mark(k, j) is TAIL and g.mark(j, k) is CIRCLE
                        and not is_potentially_2_triangulated(g, i, j, k)):
                    changed |= state.orient(j, k, ARROW, STEP, "R1", why + ", not p2t")
    return changed


def rule2(state) -> bool:
    """i -* j o-* k, i and k non-adjacent, (j, k) not p2t w.r.t. i: tail at j."""
    g = state.graph
    changed = False
    for j in range(g.p_obs):
        for i in g.neighbors(j):
            if g.mark(j, i) is not TAIL:
                continue
            for k in g.neighbors(j):
                if k == i or g.adjacent(i, k) or g.mark(k, j) is not CIRCLE:
                    continue
                if not state.seps.in_sep(i, k, j):
                    continue
                if is_potentially_2_triangulated(g, j, k, i):
                    continue
                why = f"{state.name(i)} -* {state.name(j)}, ({state.name(j)},{state.name(k)}) not p2t"
                changed |= state.orient(k, j, TAIL, STEP, "R2", why)
    return changed


def rule3(state) -> bool:
    """i *-> j - k with a unique p2t witness l: i *-> l, tails on j-l, and
    tails along the unique potentially undirected path l ... k avoiding j."""
    g = state.graph
    changed = False
    for j in range(g.p_obs):
        for i in g.neighbors(j):
            if g.mark(i, j) is not ARROW:
                continue
            for k in g.neighbors(j):
                if k == i or g.adjacent(i, k):
                    continue
                if g.mark(j, k) is not TAIL or g.mark(k, j) is not TAIL:
                    continue
                witnesses = potential_2_triangulation_witnesses(g, i, j, k)
                if len(witnesses) != 1:
                    continue
                l = witnesses[0]
                why = f"unique p2t witness {state.name(l)} for ({state.name(i)},{state.name(j)}) w.r.t. {state.name(k)}"
                if g.mark(i, l) is CIRCLE:
                    changed |= state.orient(i, l, ARROW, STEP, "R3", why)
                if g.mark(j, l) is CIRCLE:
                    changed |= state.orient(j, l, TAIL, STEP, "R3", why)
                if g.mark(l, j) is CIRCLE:
                    changed |= state.orient(l, j, TAIL, STEP, "R3", why)
                paths = potentially_undirected_paths(g, l, k, excluded={j}, limit=2)
                if len(paths) != 1:
                    continue
                for u, v in paths[0].steps:
                    if g.mark(u, v) is CIRCLE:
                        changed |= state.orient(u, v, TAIL, STEP, "R3", why + ", unique undirected path")
                    if g.mark(v, u) is CIRCLE:
                        changed |= state.orient(v, u, TAIL, STEP, "R3", why + ", unique undirected path")
    return changed


def rule4(state) -> bool:
    """i *-> j -* k plus tail walks k ... a and b ... i around one circle link a o-* b: arrowhead at a."""
    g = state.graph
    changed = False
    for j in range(g.p_obs):
        for i in g.neighbors(j):
            if g.mark(i, j) is not ARROW:
                continue
            to_i = _tail_reach_to(g, i)
            for k in g.neighbors(j):
                if k == i or g.mark(k, j) is not TAIL:
                    continue
                for a in sorted(_tail_reach_from(g, k)):
                    for b in g.neighbors(a):
                        if b in to_i and g.mark(b, a) is CIRCLE:
                            why = (f"{state.name(i)} *-> {state.name(j)} -* {state.name(k)}, tail path "
                                   f"{state.name(k)}..{state.name(a)} o-* {state.name(b)}..{state.name(i)}")
                            changed |= state.orient(b, a, ARROW, STEP, "R4", why)
    return changed


def rule5(state) -> bool:
    """Tail walk a ... b of length two or more plus a o-* b: tail at a."""
    g = state.graph
    changed = False
    for a in range(g.p_obs):
        reach: Set[int] = set()
        queue = deque(v for v in g.neighbors(a) if g.mark(v, a) is TAIL)
        reach.update(queue)
        while queue:
            u = queue.popleft()
            for v in g.neighbors(u):
                if v not in reach and g.mark(v, u) is TAIL:
                    reach.add(v)
                    queue.append(v)
        for b in g.neighbors(a):
            if g.mark(b, a) is CIRCLE and b in reach:
                why = f"tail path {state.name(a)}..{state.name(b)}"
                changed |= state.orient(b, a, TAIL, STEP, "R5", why)
    return changed


def rule6(state) -> bool:
    """k *-o i with a non-p2t path <i, j, ..., k>, <j, i, k> a non-v-structure
    and (k, i) not p2t w.r.t. j: tail at i."""
    g = state.graph
    changed = False
    p2t = _P2TCache(g)
    for i in range(g.p_obs):
        for k in g.neighbors(i):
            if g.mark(k, i) is not CIRCLE:
                continue
            for j in g.neighbors(i):
                if j == k or not _non_v_structure(state, j, i, k):
                    continue
                if p2t(k, i, j):
                    continue
                if _non_p2t_path_exists(state, [i, j], k, p2t):
                    why = f"non-p2t path {state.name(i)},{state.name(j)}..{state.name(k)}"
                    changed |= state.orient(k, i, TAIL, STEP, "R6", why)
                    p2t = _P2TCache(g)
                    break
    return changed


def _first_hops(state, i: int, k: int, target: int, p2t: _P2TCache) -> List[int]:
    """Neighbours m != k of i that start a non-p2t path from i to target."""
    g = state.graph
    return [m for m in g.neighbors(i)
            if m != k and _non_p2t_path_exists(state, [i, m], target, p2t)]


def rule7(state) -> bool:
    """i o-* k with j -* k *- l and non-p2t paths from i to j and to l whose
    first hops m, n form a non-v-structure <m, i, n>: tail at i."""
    g = state.graph
    changed = False
    p2t = _P2TCache(g)
    for i in range(g.p_obs):
        for k in g.neighbors(i):
            if g.mark(k, i) is not CIRCLE:
                continue
            tails = [v for v in g.neighbors(k) if v != i and g.mark(k, v) is TAIL]
            if len(tails) < 2:
                continue
            hops = {t: _first_hops(state, i, k, t, p2t) for t in tails}
            fired = False
            for j, l in combinations(tails, 2):
                for m in hops[j]:
                    for n in hops[l]:
                        if m == n:
                            continue
                        if not _non_v_structure(state, m, i, n):
                            continue
                        if p2t(i, k, m) or p2t(i, k, n):
                            continue
                        why = (f"non-p2t paths via {state.name(m)}, {state.name(n)} to "
                               f"{state.name(j)}, {state.name(l)} -* {state.name(k)}")
                        changed |= state.orient(k, i, TAIL, STEP, "R7", why)
                        fired = True
                        break
                    if fired:
                        break
                if fired:
                    break
            if fired:
                p2t = _P2TCache(g)
    return changed


RULES = (
    ("R1", rule1),
    ("R2", rule2),
    ("R3", rule3),
    ("R4", rule4),
    ("R5", rule5),
    ("R6", rule6),
    ("R7", rule7),
)


def apply_orientation_rules(state, max_passes: Optional[int] = None):
    """Apply R1-R7 in order until a full pass changes nothing."""
    passes = 0
    changed = True
    while changed:
        changed = False
        for _, rule in RULES:
            if rule(state):
                changed = True
        passes += 1
        if max_passes is not None and passes >= max_passes:
            break
    state.log_fn(f"Orientation rules reached a fixpoint after {passes} pass(es)", "debug")
    return state
