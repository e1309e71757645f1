"""
Cyclic Causal Inference: skeleton discovery, v-structures, long-range and
SupSep-based orientation (Steps 1-6), with the orientation rules of Step 7 in
orientation_rules.py.

Every mark change goes through DiscoveryState.orient, which enforces that only
circles are ever refined and records a trace entry.
"""

import re
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from ci import CiProvider
from errors import CciError, InputError, OrientationConflictError
from graph_core import (
    EndpointMark,
    MixedGraph,
    iter_ordered_pairs,
    unshielded_triples,
)
from orientation_rules import apply_orientation_rules

ARROW = EndpointMark.ARROW
TAIL = EndpointMark.TAIL
CIRCLE = EndpointMark.CIRCLE

REMOVAL_RULES = frozenset({"pc-skeleton", "pdsep-skeleton", "rfci-skeleton"})
STEP_COUNT = 7


# =============================================================================
# Separating sets
# =============================================================================


class SepStore:
    """Minimal separating sets per unordered pair and SupSep sets per ordered triple."""

    def __init__(self):
        self._sep: Dict[FrozenSet[int], FrozenSet[int]] = {}
        self._supsep: Dict[Tuple[int, int, int], FrozenSet[int]] = {}

    def set_sep(self, i: int, j: int, w: Iterable[int]) -> None:
        w = frozenset(w)
        if i in w or j in w:
            raise InputError(f"Separating set {sorted(w)} contains an endpoint of ({i}, {j})")
        self._sep[frozenset((i, j))] = w

    def sep(self, i: int, j: int) -> Optional[FrozenSet[int]]:
        return self._sep.get(frozenset((i, j)))

    def has_sep(self, i: int, j: int) -> bool:
        return frozenset((i, j)) in self._sep

    def in_sep(self, i: int, j: int, v: int) -> bool:
        """True iff a separating set for (i, j) is stored and contains v."""
        w = self.sep(i, j)
        return w is not None and v in w

    def sep_items(self) -> List[Tuple[Tuple[int, int], FrozenSet[int]]]:
        return sorted((tuple(sorted(pair)), w) for pair, w in self._sep.items())

    def set_supsep(self, i: int, j: int, k: int, t: Iterable[int]) -> None:
        t = frozenset(t)
        if j not in t:
            raise InputError(f"SupSep({i},{j},{k}) must contain {j}")
        if i in t or k in t:
            raise InputError(f"SupSep({i},{j},{k}) must not contain its endpoints")
        self._supsep[(i, j, k)] = t

    def supsep(self, i: int, j: int, k: int) -> Optional[FrozenSet[int]]:
        return self._supsep.get((i, j, k))

    def supsep_items(self) -> List[Tuple[Tuple[int, int, int], FrozenSet[int]]]:
        return sorted(self._supsep.items())

    def __len__(self) -> int:
        return len(self._sep)


# =============================================================================
# Trace log
# =============================================================================


_TRACE_RE = re.compile(
    r"^step=(?P<step>\d+) rule=(?P<rule>\S+) edge=(?P<edge>\S+) mark=(?P<mark>\S+) because=(?P<because>.*)$"
)


@dataclass(frozen=True)
class TraceEntry:
    """One algorithm action: an edge removal, a mark change, a reset or a SupSep record."""

    step: int
    rule: str
    edge: Optional[Tuple[int, int]]
    end: Optional[int]
    mark: Optional[EndpointMark]
    because: str

    def to_line(self) -> str:
        edge = f"{self.edge[0]},{self.edge[1]}" if self.edge else "*"
        if self.mark is None:
            mark = "none"
        else:
            mark = f"{'*' if self.end is None else self.end}:{self.mark.value}"
        return f"step={self.step} rule={self.rule} edge={edge} mark={mark} because={self.because}"

    @classmethod
    def from_line(cls, line: str) -> "TraceEntry":
        match = _TRACE_RE.match(line.rstrip("\n"))
        if not match:
            raise InputError(f"Malformed trace line: {line!r}")
        edge = None
        if match["edge"] != "*":
            a, _, b = match["edge"].partition(",")
            edge = (int(a), int(b))
        end = mark = None
        if match["mark"] != "none":
            end_s, _, mark_s = match["mark"].partition(":")
            end = None if end_s == "*" else int(end_s)
            mark = EndpointMark.from_symbol(mark_s)
        return cls(int(match["step"]), match["rule"], edge, end, mark, match["because"])


def format_set(vertices: Iterable[int], name=str) -> str:
    vs = sorted(vertices)
    if not vs:
        return "∅"
    return "{" + ",".join(name(v) for v in vs) + "}"


# =============================================================================
# Discovery state
# =============================================================================


@dataclass
class DiscoveryState:
    """Mutable working state of one discovery run; owned by a single caller."""

    graph: MixedGraph
    seps: SepStore = field(default_factory=SepStore)
    triples: List[Tuple[int, int, int]] = field(default_factory=list)
    trace: List[TraceEntry] = field(default_factory=list)
    snapshots: Dict[str, MixedGraph] = field(default_factory=dict)
    log_fn: object = None

    def __post_init__(self):
        self.log_fn = self.log_fn or (lambda msg, lvl="info": None)

    @classmethod
    def initial(cls, p_obs: int, names: Optional[Sequence[str]] = None, log_fn=None) -> "DiscoveryState":
        return cls(MixedGraph.complete(p_obs, CIRCLE, names), log_fn=log_fn)

    @property
    def p_obs(self) -> int:
        return self.graph.p_obs

    def name(self, v: int) -> str:
        return self.graph.vertex_name(v)

    def names_of(self, vertices: Iterable[int]) -> str:
        return format_set(vertices, self.name)

    def snapshot(self, label: str) -> None:
        self.snapshots[label] = self.graph.copy()

    def record(self, entry: TraceEntry) -> None:
        self.trace.append(entry)
        self.log_fn(entry.to_line(), "debug")

    def orient(self, u: int, v: int, mark: EndpointMark, step: int, rule: str, because: str) -> bool:
        """Set the mark at v on edge u-v. Returns False when it is already set.

        Only circles may change; overwriting a tail or arrowhead raises.
        """
        current = self.graph.mark(u, v)
        if current is mark:
            return False
        if current is not CIRCLE:
            raise OrientationConflictError(
                f"{rule} (step {step}) tried to set {mark.value!r} at {self.name(v)} on "
                f"{self.name(u)}-{self.name(v)}, which already has {current.value!r}",
                self.trace,
            )
        self.graph.set_mark(u, v, mark)
        self.record(TraceEntry(step, rule, (min(u, v), max(u, v)), v, mark, because))
        return True

    def remove_edge(self, i: int, j: int, w: Iterable[int], step: int, rule: str) -> None:
        w = frozenset(w)
        self.graph.remove_edge(i, j)
        self.seps.set_sep(i, j, w)
        because = f"Sep({self.name(i)},{self.name(j)})={self.names_of(w)}"
        self.record(TraceEntry(step, rule, (min(i, j), max(i, j)), None, None, because))


def colex_subsets(items: Iterable[int], size: int) -> List[Tuple[int, ...]]:
    """Subsets of the given size in colexicographic order."""
    return sorted(combinations(sorted(items), size), key=lambda c: tuple(reversed(c)))


def ci_independent(ci: CiProvider, i: int, j: int, w: Iterable[int]) -> bool:
    w = frozenset(w)
    try:
        return ci.independent(i, j, w)
    except CciError as e:
        raise type(e)(f"CI test ({i}, {j} | {sorted(w)}) failed: {e}") from e


def _within_cap(size: int, max_cond_size: Optional[int]) -> bool:
    return max_cond_size is None or size <= max_cond_size


# =============================================================================
# Step 1: skeleton
# =============================================================================


def pc_skeleton(
    ci: CiProvider,
    p_obs: int,
    max_cond_size: Optional[int] = None,
    names: Optional[Sequence[str]] = None,
    log_fn=None,
) -> DiscoveryState:
    """Level-wise PC edge removal from the complete circle graph.

    Conditioning sets are drawn from the live adjacency of the first vertex.
    """
    state = DiscoveryState.initial(p_obs, names, log_fn)
    g = state.graph
    level = 0
    while _within_cap(level, max_cond_size):
        any_candidate = False
        for i, j in iter_ordered_pairs(p_obs):
            if not g.adjacent(i, j):
                continue
            others = [v for v in g.neighbors(i) if v != j]
            if len(others) < level:
                continue
            any_candidate = True
            for w in colex_subsets(others, level):
                if ci_independent(ci, i, j, w):
                    state.remove_edge(i, j, w, 1, "pc-skeleton")
                    break
        if not any_candidate:
            break
        level += 1
    state.triples = unshielded_triples(g)
    state.log_fn(f"PC skeleton: {g.edge_count()} edges, {len(state.triples)} unshielded triples", "info")
    state.snapshot("pc")
    return state


def orient_v_structures(state: DiscoveryState, ci: Optional[CiProvider] = None, step: int = 2,
                        rule: str = "vstruct") -> DiscoveryState:
    """Arrowheads at j for every pending triple (i, j, k) with j outside Sep(i, k)."""
    g = state.graph
    for i, j, k in state.triples:
        if not (g.adjacent(i, j) and g.adjacent(j, k)) or g.adjacent(i, k):
            continue
        sep = state.seps.sep(i, k)
        if sep is None or j in sep:
            continue
        because = f"Sep({state.name(i)},{state.name(k)})={state.names_of(sep)}"
        state.orient(i, j, ARROW, step, rule, because)
        state.orient(k, j, ARROW, step, rule, because)
    return state


def compute_pd_sep(state: DiscoveryState, oi: int) -> Set[int]:
    """Vertices reachable from oi along edges whose every inner triple is a collider or a triangle."""
    g = state.graph
    result: Set[int] = set()
    seen: Set[Tuple[int, int]] = set()
    queue = deque()
    for n in g.neighbors(oi):
        result.add(n)
        seen.add((oi, n))
        queue.append((oi, n))
    while queue:
        prev, cur = queue.popleft()
        for nxt in g.neighbors(cur):
            if nxt in (prev, oi) or (cur, nxt) in seen:
                continue
            collider = g.mark(prev, cur) is ARROW and g.mark(nxt, cur) is ARROW
            if collider or g.adjacent(prev, nxt):
                seen.add((cur, nxt))
                result.add(nxt)
                queue.append((cur, nxt))
    return result


def fci_final_skeleton(state: DiscoveryState, ci: CiProvider, max_cond_size: Optional[int] = None) -> DiscoveryState:
    """Retest adjacencies against subsets of PD-SEP, then reset every mark to a circle."""
    g = state.graph
    for i in range(state.p_obs):
        pdsep = compute_pd_sep(state, i)
        for j in g.neighbors(i):
            if not g.adjacent(i, j):
                continue
            pool = sorted(pdsep - {j})
            removed = False
            for level in range(len(pool) + 1):
                if removed or not _within_cap(level, max_cond_size):
                    break
                for w in colex_subsets(pool, level):
                    if ci_independent(ci, i, j, w):
                        state.remove_edge(i, j, w, 1, "pdsep-skeleton")
                        removed = True
                        break
    if g.edge_count():
        g.reset_marks(CIRCLE)
        state.record(TraceEntry(1, "reset", None, None, CIRCLE, "all edges reset to o-o"))
    state.triples = unshielded_triples(g)
    state.log_fn(f"Final skeleton: {g.edge_count()} edges", "info")
    return state


# =============================================================================
# Steps 3-6
# =============================================================================


def step3_long_range_nonancestral(state: DiscoveryState, ci: CiProvider, long_range: bool = False) -> DiscoveryState:
    """Arrowhead at k on k o-* i when k lies outside Sep(i, j) yet is dependent on both i and j given it.

    By default k must close the triple <i, k, j>, i.e. neighbour j as well as i.
    With ``long_range`` any neighbour of i qualifies. Candidates on which the
    two readings disagree are logged at debug level.
    """
    g = state.graph
    for (a, b), sep in state.seps.sep_items():
        for i, j in ((a, b), (b, a)):
            for k in g.neighbors(i):
                if k == j or k in sep or g.mark(i, k) is not CIRCLE:
                    continue
                if ci_independent(ci, i, k, sep) or ci_independent(ci, j, k, sep):
                    continue
                because = (f"{state.name(k)} dependent on {state.name(i)} and {state.name(j)} "
                           f"given Sep({state.name(a)},{state.name(b)})={state.names_of(sep)}")
                if not long_range and not g.adjacent(j, k):
                    state.log_fn(f"Step 3 skips arrowhead at {state.name(k)} on {state.name(i)}-{state.name(k)}: "
                                 f"{because}, but {state.name(k)} does not neighbour {state.name(j)}", "debug")
                    continue
                state.orient(i, k, ARROW, 3, "step3", because)
    return state


def _ordered_v_structures(g: MixedGraph) -> List[Tuple[int, int, int]]:
    out = []
    for j in range(g.p_obs):
        into = [v for v in g.neighbors(j) if g.mark(v, j) is ARROW]
        for i in into:
            for k in into:
                if i != k and not g.adjacent(i, k):
                    out.append((i, j, k))
    out.sort()
    return out


def step4_supsep_search(state: DiscoveryState, ci: CiProvider, max_cond_size: Optional[int] = None) -> DiscoveryState:
    """Record SupSep(i, j, k): the first superset of Sep(i, k) ∪ {j} that separates i and k."""
    g = state.graph
    pdseps = {i: compute_pd_sep(state, i) for i in range(state.p_obs)}
    for i, j, k in _ordered_v_structures(g):
        sep = state.seps.sep(i, k)
        if sep is None:
            continue
        pool = sorted(pdseps[i] - sep - {j, k})
        found = None
        for size in range(len(pool) + 1):
            if found is not None or not _within_cap(size + len(sep) + 1, max_cond_size):
                break
            for w in colex_subsets(pool, size):
                t = frozenset(w) | sep | {j}
                if ci_independent(ci, i, k, t):
                    found = t
                    break
        if found is None:
            continue
        state.seps.set_supsep(i, j, k, found)
        because = f"SupSep({state.name(i)},{state.name(j)},{state.name(k)})={state.names_of(found)}"
        state.record(TraceEntry(4, "supsep", None, None, None, because))
    return state


def step5_orient_with_supsep(state: DiscoveryState) -> DiscoveryState:
    """Quadruple rule: i *-> l <-* k with j in a separator of (i, k) orients the j-l edge."""
    g = state.graph
    for (i, k), sep in state.seps.sep_items():
        if g.adjacent(i, k):
            continue
        for l in g.neighbors(i):
            if l in sep or not g.adjacent(k, l):
                continue
            if g.mark(i, l) is not ARROW or g.mark(k, l) is not ARROW:
                continue
            for j in sorted(sep):
                if g.adjacent(j, l) and g.mark(j, l) is CIRCLE:
                    because = (f"{state.name(l)} collider between {state.name(i)},{state.name(k)} "
                               f"outside Sep={state.names_of(sep)} containing {state.name(j)}")
                    state.orient(j, l, ARROW, 5, "step5-arrow", because)
    for (i, j, k), t in state.seps.supsep_items():
        if not (g.adjacent(i, j) and g.adjacent(k, j)):
            continue
        if g.mark(i, j) is not ARROW or g.mark(k, j) is not ARROW:
            continue
        for l in sorted(t - {j}):
            if not (g.adjacent(i, l) and g.adjacent(k, l) and g.adjacent(j, l)):
                continue
            if g.mark(i, l) is ARROW and g.mark(k, l) is ARROW and g.mark(j, l) is CIRCLE:
                because = (f"{state.name(l)} in SupSep({state.name(i)},{state.name(j)},{state.name(k)})"
                           f"={state.names_of(t)}")
                state.orient(j, l, TAIL, 5, "step5-tail", because)
    return state


def step6_long_range_ancestral(state: DiscoveryState, ci: CiProvider) -> DiscoveryState:
    """Arrowhead at l on l o-* j when adding l to a recorded separator of (i, k), j in it, makes i, k dependent."""
    g = state.graph
    records = [(i, k, w) for (i, k), w in state.seps.sep_items()]
    records += [(i, k, t) for (i, _, k), t in state.seps.supsep_items()]
    for i, k, w in records:
        for j in sorted(w):
            for l in g.neighbors(j):
                if l in w or l in (i, k) or g.mark(j, l) is not CIRCLE:
                    continue
                if ci_independent(ci, i, k, w | {l}):
                    continue
                because = (f"{state.name(i)},{state.name(k)} dependent given "
                           f"{state.names_of(w | {l})}, separator {state.names_of(w)} holds {state.name(j)}")
                state.orient(j, l, ARROW, 6, "step6", because)
    return state


# =============================================================================
# Full runs
# =============================================================================


def skeleton_and_v_structures(
    ci: CiProvider,
    p_obs: int,
    max_cond_size: Optional[int] = None,
    names: Optional[Sequence[str]] = None,
    log_fn=None,
) -> DiscoveryState:
    """Steps 1 and 2: PC skeleton, PD-SEP skeleton, fresh v-structures."""
    state = pc_skeleton(ci, p_obs, max_cond_size, names, log_fn)
    orient_v_structures(state, ci, step=1, rule="vstruct-pass1")
    fci_final_skeleton(state, ci, max_cond_size)
    state.snapshot("step1")
    orient_v_structures(state, ci, step=2, rule="vstruct")
    state.snapshot("step2")
    return state


def cci_run(
    ci: CiProvider,
    p_obs: int,
    names: Optional[Sequence[str]] = None,
    orientation_rules: bool = True,
    max_cond_size: Optional[int] = None,
    log_fn=None,
    long_range: bool = False,
) -> DiscoveryState:
    """Run Steps 1-7. With ``orientation_rules=False`` Step 7 is skipped;
    ``long_range`` widens Step 3 to every neighbour of the separated vertex."""
    state = skeleton_and_v_structures(ci, p_obs, max_cond_size, names, log_fn)
    step3_long_range_nonancestral(state, ci, long_range)
    state.snapshot("step3")
    step4_supsep_search(state, ci, max_cond_size)
    step5_orient_with_supsep(state)
    state.snapshot("step5")
    step6_long_range_ancestral(state, ci)
    state.snapshot("step6")
    if orientation_rules:
        apply_orientation_rules(state)
    state.snapshot("final")
    state.log_fn(f"Discovery done: {state.graph.edge_count()} edges, {ci.query_count} CI queries", "info")
    return state


# =============================================================================
# Trace rendering and replay
# =============================================================================


def trace_lines(state: DiscoveryState) -> List[str]:
    return [e.to_line() for e in state.trace]


def read_trace_lines(lines: Iterable[str]) -> List[TraceEntry]:
    return [TraceEntry.from_line(line) for line in lines if line.strip() and not line.startswith("#")]


def replay_trace(entries: Iterable[TraceEntry], p_obs: int) -> MixedGraph:
    """Rebuild the output graph from a trace: removals, then reset, then marks in order."""
    g = MixedGraph.complete(p_obs, CIRCLE)
    for e in entries:
        if e.rule in REMOVAL_RULES:
            g.remove_edge(*e.edge)
        elif e.rule == "reset":
            g.reset_marks(e.mark or CIRCLE)
        elif e.edge is not None and e.mark is not None and e.end is not None:
            other = e.edge[0] if e.end == e.edge[1] else e.edge[1]
            g.set_mark(other, e.end, e.mark)
    return g


_MARK_WORDS = {ARROW: "arrowhead", TAIL: "tail", CIRCLE: "circle"}


def format_human_trace(state: DiscoveryState) -> List[str]:
    """Per-step readable log; consecutive marks at one vertex for one reason are merged."""
    by_step: Dict[int, List[TraceEntry]] = {s: [] for s in range(1, STEP_COUNT + 1)}
    for e in state.trace:
        by_step.setdefault(e.step, []).append(e)
    lines: List[str] = []
    for step in sorted(by_step):
        entries = by_step[step]
        if not entries:
            lines.append(f"Step {step}: no actions")
            continue
        idx = 0
        while idx < len(entries):
            e = entries[idx]
            group = [e]
            while (idx + len(group) < len(entries)
                   and entries[idx + len(group)].rule == e.rule
                   and entries[idx + len(group)].end == e.end
                   and entries[idx + len(group)].mark == e.mark
                   and entries[idx + len(group)].because == e.because
                   and e.end is not None):
                group.append(entries[idx + len(group)])
            idx += len(group)
            lines.append(f"Step {step}: {_describe(state, e, len(group))}")
    return lines


def _describe(state: DiscoveryState, e: TraceEntry, count: int) -> str:
    tag = f"[{e.rule}] " if e.rule.startswith("R") else ""
    if e.rule in REMOVAL_RULES:
        a, b = e.edge
        return f"removed {state.name(a)}-{state.name(b)} ({e.because})"
    if e.rule == "reset":
        return "all edges reset to o-o"
    if e.rule == "supsep":
        return e.because
    word = _MARK_WORDS[e.mark]
    if count > 1:
        return f"{tag}{word}s at {state.name(e.end)} ({e.because})"
    a, b = e.edge
    other = a if e.end == b else b
    return f"{tag}{word} at {state.name(e.end)} on {state.name(other)}-{state.name(e.end)} ({e.because})"
