import itertools

import numpy as np
import pytest

from baselines_eval import (
    ReportRow,
    ShdResult,
    audit_soundness,
    corrected_oracle_graph,
    endpoint_orientation_fraction,
    evaluate_against_truth,
    reference_graph,
    report_header,
    rfci_v_structures,
    run_algorithm,
    shd,
)
from cci import orient_v_structures, pc_skeleton
from ci import OracleCi
from conftest import O, random_system
from dsep_oracle import is_d_separated
from errors import InputError
from graph_core import DirectedSystem, EndpointMark, MixedGraph

ARROW, TAIL, CIRCLE = EndpointMark.ARROW, EndpointMark.TAIL, EndpointMark.CIRCLE


def _random_mixed(rng, p):
    m = MixedGraph(p)
    marks = list(EndpointMark)
    for i, j in itertools.combinations(range(p), 2):
        if rng.random() < 0.5:
            m.add_edge(i, j, marks[rng.integers(3)], marks[rng.integers(3)])
    return m


# =============================================================================
# Corrected oracle graphs
# =============================================================================


def test_correction_fixes_the_wrong_tail(ccd_output, confounded_cycle_system):
    report = corrected_oracle_graph(ccd_output, confounded_cycle_system)
    assert report.fixes == [((0, 1), 0, TAIL, ARROW)]
    assert report.n_fixes == 1
    assert (report.n_arrow_fixed, report.n_tail_fixed) == (0, 1)
    assert report.corrected.marks(0, 1) == (ARROW, ARROW)
    assert ccd_output.marks(0, 1) == (TAIL, ARROW)


def test_sound_output_needs_no_correction(cci_final, confounded_cycle_system):
    report = corrected_oracle_graph(cci_final, confounded_cycle_system)
    assert report.n_fixes == 0
    assert report.corrected == cci_final


def test_correction_is_idempotent():
    rng = np.random.default_rng(5)
    for _ in range(30):
        g = random_system(rng, 6)
        p_obs = len(g.observed)
        out = _random_mixed(rng, p_obs)
        once = corrected_oracle_graph(out, g).corrected
        assert corrected_oracle_graph(once, g).n_fixes == 0


def test_correction_checks_sizes(cci_final, two_cycle_system):
    with pytest.raises(InputError):
        corrected_oracle_graph(cci_final, two_cycle_system)


def test_audit_reports_wrong_marks(ccd_output, cci_final, confounded_cycle_system):
    assert audit_soundness(cci_final, confounded_cycle_system) == []
    assert audit_soundness(ccd_output, confounded_cycle_system) == ["wrong tail at O1 on O1-O2"]


def test_audit_reports_skeleton_errors(cci_final, confounded_cycle_system):
    out = cci_final.copy()
    out.remove_edge(1, 2)
    out.add_edge(0, 4, CIRCLE, CIRCLE)
    problems = audit_soundness(out, confounded_cycle_system)
    assert "extra edge O1-O5" in problems
    assert "missing edge O2-O3" in problems


# =============================================================================
# Distances
# =============================================================================


def test_shd_between_cci_and_ccd(cci_final, ccd_output):
    assert shd(cci_final, ccd_output) == ShdResult(0, 10)
    assert shd(cci_final, ccd_output).total == 10
    assert shd(ccd_output, cci_final) == shd(cci_final, ccd_output)


def test_shd_counts_flips():
    rng = np.random.default_rng(6)
    for _ in range(30):
        a = _random_mixed(rng, 6)
        b = a.copy()
        flipped = 0
        for i, j, mi, mj in a.edges():
            if rng.random() < 0.3:
                b.set_mark(i, j, next(m for m in EndpointMark if m is not mj))
                flipped += 1
        assert shd(a, b) == ShdResult(0, flipped)


def test_shd_is_a_metric():
    rng = np.random.default_rng(7)
    for _ in range(30):
        a, b, c = (_random_mixed(rng, 5) for _ in range(3))
        assert shd(a, a).total == 0
        assert shd(a, b) == shd(b, a)
        assert shd(a, c).total <= shd(a, b).total + shd(b, c).total


def test_shd_size_mismatch():
    with pytest.raises(InputError):
        shd(MixedGraph(2), MixedGraph(3))


def test_orientation_fraction(ccd_output, cci_final, cci_skeleton):
    assert endpoint_orientation_fraction(ccd_output, cci_final) == pytest.approx(0.2)
    assert endpoint_orientation_fraction(cci_final, cci_final) == 1.0
    assert endpoint_orientation_fraction(cci_final, cci_skeleton) == 1.0


# =============================================================================
# Algorithm variants
# =============================================================================


def test_rfci_matches_plain_v_structures_on_a_dag():
    # 0 -> 2 <- 1, 2 -> 3
    g = DirectedSystem(4, frozenset({(0, 2), (1, 2), (2, 3)}), (O,) * 4)
    rfci = run_algorithm("rfci-fragment", OracleCi(g), 4)
    plain = orient_v_structures(pc_skeleton(OracleCi(g), 4))
    assert rfci.graph == plain.graph
    assert rfci.graph.marks(0, 2) == (CIRCLE, ARROW)
    assert rfci.graph.marks(1, 2) == (CIRCLE, ARROW)


def test_rfci_separators_are_true_separations():
    rng = np.random.default_rng(8)
    for _ in range(40):
        g = random_system(rng, 6)
        state = pc_skeleton(OracleCi(g), len(g.observed))
        rfci_v_structures(state, OracleCi(g))
        obs, sel = g.observed, set(g.selection)
        for (i, j), w in state.seps.sep_items():
            assert is_d_separated(g, obs[i], obs[j], {obs[v] for v in w} | sel)


def test_unknown_algorithm():
    with pytest.raises(InputError):
        run_algorithm("ges", OracleCi(DirectedSystem(2, frozenset(), (O, O))), 2)


def test_oracle_output_scores_zero(cci_final, confounded_cycle_system):
    assert reference_graph(confounded_cycle_system) == cci_final
    result = evaluate_against_truth(cci_final, confounded_cycle_system)
    assert result.shd.total == 0
    assert result.orientation_fraction == 1.0
    assert result.correction.n_fixes == 0


def test_variants_share_the_skeleton(confounded_cycle_system, cci_skeleton, cci_v_structures):
    ci = OracleCi(confounded_cycle_system)
    fragment = run_algorithm("fci-fragment", ci, 5)
    no_rules = run_algorithm("cci-no-rules", ci, 5)
    assert fragment.graph == cci_v_structures
    assert no_rules.graph.edge_pairs() == cci_skeleton.edge_pairs()


# =============================================================================
# Report rows
# =============================================================================


def test_report_row_csv():
    row = ReportRow.build(7, 6, 1000, True, "cci", ShdResult(1, 2), 40)
    assert report_header() == "seed,p,n,cyclic,algorithm,shd_total,adjacency_diffs,mark_diffs,n_ci_queries,wall_ms"
    assert row.to_csv_line() == "7,6,1000,1,cci,3,1,2,40,0"
