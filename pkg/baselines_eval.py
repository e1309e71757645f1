"""
Evaluation machinery: the RFCI v-structure subroutine, algorithm variants,
corrected oracle graphs, structural Hamming distance and endpoint-orientation
comparison.
"""

from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from cci import (
    DiscoveryState,
    ci_independent,
    cci_run,
    colex_subsets,
    pc_skeleton,
    skeleton_and_v_structures,
)
from ci import CiProvider
from dsep_oracle import ancestors_of_observed, oracle_ci, true_maag
from errors import InputError
from graph_core import DirectedSystem, EndpointMark, MixedGraph

ARROW = EndpointMark.ARROW
TAIL = EndpointMark.TAIL
CIRCLE = EndpointMark.CIRCLE


# =============================================================================
# RFCI v-structures
# =============================================================================


def _touches(triple: Tuple[int, int, int], r: int, j: int) -> bool:
    a, b, c = triple
    return {a, b} == {r, j} or {b, c} == {r, j}


def rfci_v_structures(state: DiscoveryState, ci: CiProvider) -> DiscoveryState:
    """Orient v-structures after confirming both legs of each candidate triple.

    A candidate (i, j, k), j outside Sep(i, k), is kept when i, j and j, k are
    both dependent given Sep(i, k). Otherwise each independent leg (r, j) is
    deleted with a minimal separator found inside Sep(i, k), and the triple
    lists are updated for the new non-adjacency.
    """
    g = state.graph
    pending: List[Tuple[int, int, int]] = list(state.triples)
    confirmed: List[Tuple[int, int, int]] = []
    while pending:
        i, j, k = pending.pop(0)
        if not (g.adjacent(i, j) and g.adjacent(j, k)) or g.adjacent(i, k):
            continue
        sep = state.seps.sep(i, k)
        if sep is None or j in sep:
            continue
        legs = {r: ci_independent(ci, r, j, sep) for r in (i, k)}
        if not any(legs.values()):
            confirmed.append((i, j, k))
            continue
        for r in (i, k):
            if not legs[r] or not g.adjacent(r, j):
                continue
            minimal = next(
                frozenset(w)
                for size in range(len(sep) + 1)
                for w in colex_subsets(sep, size)
                if ci_independent(ci, r, j, w)
            )
            shared = [v for v in g.neighbors(r) if v != j and g.adjacent(v, j)]
            state.remove_edge(r, j, minimal, 2, "rfci-skeleton")
            pending = [t for t in pending if not _touches(t, r, j)]
            confirmed = [t for t in confirmed if not _touches(t, r, j)]
            a, b = min(r, j), max(r, j)
            pending.extend((a, v, b) for v in shared)
    for i, j, k in confirmed:
        if not (g.adjacent(i, j) and g.adjacent(j, k)) or g.adjacent(i, k):
            continue
        sep = state.seps.sep(i, k)
        because = f"Sep({state.name(i)},{state.name(k)})={state.names_of(sep)}, both legs dependent"
        state.orient(i, j, ARROW, 2, "rfci-vstruct", because)
        state.orient(k, j, ARROW, 2, "rfci-vstruct", because)
    state.snapshot("step2")
    return state


# =============================================================================
# Algorithm variants
# =============================================================================


def run_cci(ci, p_obs, names=None, max_cond_size=None, log_fn=None) -> DiscoveryState:
    return cci_run(ci, p_obs, names, True, max_cond_size, log_fn)


def run_cci_no_rules(ci, p_obs, names=None, max_cond_size=None, log_fn=None) -> DiscoveryState:
    return cci_run(ci, p_obs, names, False, max_cond_size, log_fn)


def run_cci_long_range(ci, p_obs, names=None, max_cond_size=None, log_fn=None) -> DiscoveryState:
    """CCI with Step 3 applied to every neighbour of the separated vertex."""
    return cci_run(ci, p_obs, names, True, max_cond_size, log_fn, long_range=True)


def run_fci_fragment(ci, p_obs, names=None, max_cond_size=None, log_fn=None) -> DiscoveryState:
    """FCI skeleton with v-structures and no further orientation."""
    state = skeleton_and_v_structures(ci, p_obs, max_cond_size, names, log_fn)
    state.snapshot("final")
    return state


def run_rfci_fragment(ci, p_obs, names=None, max_cond_size=None, log_fn=None) -> DiscoveryState:
    """PC skeleton with RFCI v-structure orientation."""
    state = pc_skeleton(ci, p_obs, max_cond_size, names, log_fn)
    rfci_v_structures(state, ci)
    state.snapshot("final")
    return state


ALGORITHMS: Dict[str, Callable[..., DiscoveryState]] = {
    "cci": run_cci,
    "cci-no-rules": run_cci_no_rules,
    "cci-long-range": run_cci_long_range,
    "fci-fragment": run_fci_fragment,
    "rfci-fragment": run_rfci_fragment,
}


def run_algorithm(name: str, ci: CiProvider, p_obs: int, names=None, max_cond_size=None, log_fn=None) -> DiscoveryState:
    try:
        fn = ALGORITHMS[name]
    except KeyError:
        raise InputError(f"Unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}") from None
    return fn(ci, p_obs, names, max_cond_size, log_fn)


# =============================================================================
# Corrected oracle graph and distances
# =============================================================================


Fix = Tuple[Tuple[int, int], int, EndpointMark, EndpointMark]


@dataclass
class CorrectionReport:
    corrected: MixedGraph
    n_arrow_fixed: int = 0
    n_tail_fixed: int = 0
    fixes: List[Fix] = field(default_factory=list)

    @property
    def n_fixes(self) -> int:
        return len(self.fixes)


def _check_compatible(out: MixedGraph, truth: DirectedSystem) -> None:
    if out.p_obs != len(truth.observed):
        raise InputError(f"Graph has {out.p_obs} vertices but the truth has {len(truth.observed)} observed")


def corrected_oracle_graph(out: MixedGraph, truth: DirectedSystem) -> CorrectionReport:
    """Flip every arrowhead at an ancestor to a tail and every tail at a non-ancestor to an arrowhead.

    Ancestry of an endpoint v on edge u-v is taken w.r.t. {u} ∪ S in the truth.
    Circles and adjacencies are left alone.
    """
    _check_compatible(out, truth)
    anc = {u: ancestors_of_observed(truth, {u}) for u in range(out.p_obs)}
    report = CorrectionReport(out.copy())
    for i, j, mark_i, mark_j in out.edges():
        for u, v, mark in ((i, j, mark_j), (j, i, mark_i)):
            is_anc = v in anc[u]
            if mark is ARROW and is_anc:
                report.corrected.set_mark(u, v, TAIL)
                report.n_arrow_fixed += 1
                report.fixes.append(((i, j), v, ARROW, TAIL))
            elif mark is TAIL and not is_anc:
                report.corrected.set_mark(u, v, ARROW)
                report.n_tail_fixed += 1
                report.fixes.append(((i, j), v, TAIL, ARROW))
    return report


@dataclass(frozen=True)
class ShdResult:
    adjacency_diffs: int
    mark_diffs: int

    @property
    def total(self) -> int:
        return self.adjacency_diffs + self.mark_diffs


def shd(a: MixedGraph, b: MixedGraph) -> ShdResult:
    """Adjacency mismatches plus differing endpoint marks on shared edges."""
    if a.p_obs != b.p_obs:
        raise InputError(f"Graphs differ in size: {a.p_obs} vs {b.p_obs}")
    edges_a = {(i, j): (mi, mj) for i, j, mi, mj in a.edges()}
    edges_b = {(i, j): (mi, mj) for i, j, mi, mj in b.edges()}
    adjacency = len(edges_a.keys() ^ edges_b.keys())
    marks = 0
    for key in edges_a.keys() & edges_b.keys():
        marks += sum(x is not y for x, y in zip(edges_a[key], edges_b[key]))
    return ShdResult(adjacency, marks)


def endpoint_orientation_fraction(candidate: MixedGraph, reference: MixedGraph) -> float:
    """Share of the reference's non-circle endpoints that are non-circle in the candidate.

    Endpoints on edges the candidate lacks count as not oriented. 1.0 when the
    reference orients nothing.
    """
    if candidate.p_obs != reference.p_obs:
        raise InputError(f"Graphs differ in size: {candidate.p_obs} vs {reference.p_obs}")
    total = hit = 0
    for i, j, mark_i, mark_j in reference.edges():
        for u, v, mark in ((j, i, mark_i), (i, j, mark_j)):
            if mark is CIRCLE:
                continue
            total += 1
            if candidate.adjacent(u, v) and candidate.mark(u, v) is not CIRCLE:
                hit += 1
    return 1.0 if total == 0 else hit / total


def audit_soundness(out: MixedGraph, truth: DirectedSystem) -> List[str]:
    """Problems with an oracle-run output: skeleton mismatches and ancestrally wrong marks."""
    _check_compatible(out, truth)
    problems = []
    maag = true_maag(truth).graph
    for i, j in sorted(set(out.edge_pairs()) ^ set(maag.edge_pairs())):
        kind = "extra" if out.adjacent(i, j) else "missing"
        problems.append(f"{kind} edge {out.vertex_name(i)}-{out.vertex_name(j)}")
    for (i, j), v, old, new in corrected_oracle_graph(out, truth).fixes:
        problems.append(f"wrong {old.name.lower()} at {out.vertex_name(v)} on {out.vertex_name(i)}-{out.vertex_name(j)}")
    return problems


# =============================================================================
# Evaluation against a ground truth
# =============================================================================


@dataclass
class EvaluationResult:
    correction: CorrectionReport
    reference: MixedGraph
    shd: ShdResult
    orientation_fraction: float


def reference_graph(truth: DirectedSystem, algorithm: str = "cci", max_cond_size: Optional[int] = None) -> MixedGraph:
    """Corrected oracle graph: the algorithm run with the exact oracle, then corrected."""
    state = run_algorithm(algorithm, oracle_ci(truth), len(truth.observed), truth.observed_names(), max_cond_size)
    return corrected_oracle_graph(state.graph, truth).corrected


def evaluate_against_truth(
    out: MixedGraph,
    truth: DirectedSystem,
    algorithm: str = "cci",
    reference: Optional[MixedGraph] = None,
) -> EvaluationResult:
    _check_compatible(out, truth)
    if reference is None:
        reference = reference_graph(truth, algorithm)
    return EvaluationResult(
        corrected_oracle_graph(out, truth),
        reference,
        shd(out, reference),
        endpoint_orientation_fraction(out, reference),
    )


REPORT_COLUMNS = (
    "seed", "p", "n", "cyclic", "algorithm",
    "shd_total", "adjacency_diffs", "mark_diffs", "n_ci_queries", "wall_ms",
)


@dataclass(frozen=True)
class ReportRow:
    seed: int
    p: int
    n: int
    cyclic: bool
    algorithm: str
    shd_total: int
    adjacency_diffs: int
    mark_diffs: int
    n_ci_queries: int
    wall_ms: int = 0

    @classmethod
    def build(cls, seed: int, p: int, n: int, cyclic: bool, algorithm: str, result: ShdResult,
              n_ci_queries: int, wall_ms: int = 0) -> "ReportRow":
        return cls(seed, p, n, cyclic, algorithm, result.total, result.adjacency_diffs,
                   result.mark_diffs, n_ci_queries, wall_ms)

    def as_dict(self) -> dict:
        return asdict(self)

    def to_csv_line(self) -> str:
        values = self.as_dict()
        values["cyclic"] = int(self.cyclic)
        return ",".join(str(values[c]) for c in REPORT_COLUMNS)


def report_header() -> str:
    return ",".join(REPORT_COLUMNS)