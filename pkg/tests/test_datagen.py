import numpy as np
import pandas as pd
import pytest

from conftest import O, S
from datagen import (
    Dataset,
    GenConfig,
    analytic_covariance,
    apply_selection,
    check_columns,
    generate_system,
    inject_latent_selection,
    is_safely_invertible,
    make_rng,
    random_dag,
    random_dcg,
    replicate_seed,
    sample_equilibrium,
)
from errors import DegenerateSelectionError, InputError
from graph_core import DirectedSystem, VertexClass


@pytest.mark.parametrize("kwargs", [
    {"p": 1, "expected_neighborhood": 0.5},
    {"p": 5, "expected_neighborhood": 5},
    {"p": 5, "expected_neighborhood": 2, "coef_range": (0.5, 0.1)},
    {"p": 5, "expected_neighborhood": 2, "n_latent_max": -1},
])
def test_gen_config_validation(kwargs):
    with pytest.raises(InputError):
        GenConfig(**kwargs)


def test_random_dcg_is_cyclic_and_invertible():
    cfg = GenConfig(p=8, expected_neighborhood=2, seed=3)
    g = random_dcg(cfg, make_rng(cfg.seed))
    assert g.has_cycle()
    assert is_safely_invertible(g.coeffs)
    low, high = cfg.coef_range
    magnitudes = np.abs(g.coeffs[g.coeffs != 0])
    assert ((magnitudes >= low) & (magnitudes <= high)).all()


def test_random_dag_is_acyclic():
    cfg = GenConfig(p=10, expected_neighborhood=3, cyclic=False, seed=4)
    g = random_dag(cfg, make_rng(cfg.seed))
    assert not g.has_cycle()
    assert all(i < j for i, j in g.edges)


def test_generator_kind_must_match_config():
    with pytest.raises(InputError):
        random_dag(GenConfig(p=4, expected_neighborhood=1, cyclic=True), make_rng(0))


def test_injected_latents_and_selection_follow_their_pools():
    for seed in range(20):
        cfg = GenConfig(p=10, expected_neighborhood=3, seed=seed)
        base = random_dcg(cfg, make_rng(seed))
        g = inject_latent_selection(base, cfg, make_rng(seed))
        assert len(g.latent) <= cfg.n_latent_max
        assert len(g.selection) <= cfg.n_select_max
        assert all(len(base.children(v)) >= 2 for v in g.latent)
        assert all(len(base.parents(v)) >= 2 for v in g.selection)
        assert g.edges == base.edges


def test_generation_is_deterministic():
    cfg = GenConfig(p=8, expected_neighborhood=2, seed=9)
    a = generate_system(cfg, make_rng(9))
    b = generate_system(cfg, make_rng(9))
    assert a == b
    assert np.array_equal(a.coeffs, b.coeffs)
    da = sample_equilibrium(a, 200, make_rng(1))
    db = sample_equilibrium(b, 200, make_rng(1))
    pd.testing.assert_frame_equal(da.frame, db.frame)


def test_replicate_streams_differ():
    assert make_rng(5).random() != make_rng(5, 1).random()
    assert make_rng(5, 1).random() == make_rng(5, 1).random()


def test_replicate_seed_regenerates_the_stream():
    seed = replicate_seed(5, 3)
    assert seed != 5 and seed != replicate_seed(5, 4)
    assert make_rng(seed).random() == make_rng(5, 3).random()
    assert replicate_seed(5) == 5


def test_sample_columns_are_named_by_vertex(two_cycle_system):
    d = sample_equilibrium(two_cycle_system, 10, make_rng(0))
    assert list(d.frame.columns) == ["O1", "O2", "O3", "O4"]
    assert d.vertices == (0, 1, 2, 3)


def test_sampling_needs_coefficients():
    g = DirectedSystem(2, frozenset({(0, 1)}), (O, O))
    with pytest.raises(InputError):
        sample_equilibrium(g, 10, make_rng(0))


def test_two_cycle_covariance(two_cycle_system):
    d = sample_equilibrium(two_cycle_system, 100_000, make_rng(17))
    empirical = np.cov(d.values, rowvar=False)
    assert np.linalg.norm(empirical - analytic_covariance(two_cycle_system.coeffs)) < 0.1


@pytest.mark.slow
def test_random_system_covariances():
    for seed in range(20):
        cfg = GenConfig(p=8, expected_neighborhood=2, seed=seed)
        g = random_dcg(cfg, make_rng(seed))
        d = sample_equilibrium(g, 100_000, make_rng(seed, 1))
        expected = analytic_covariance(g.coeffs)
        empirical = np.cov(d.values, rowvar=False)
        assert np.linalg.norm(empirical - expected) / np.linalg.norm(expected) < 0.1


# =============================================================================
# Selection and datasets
# =============================================================================


def _selected_system():
    coeffs = np.zeros((3, 3))
    coeffs[2, 0] = 0.8
    coeffs[2, 1] = -0.6
    return DirectedSystem.from_coeffs(coeffs, labels=(O, O, S))


def test_selection_keeps_positive_rows_in_order():
    g = _selected_system()
    full = sample_equilibrium(g, 500, make_rng(2))
    kept = apply_selection(full, g)
    expected = full.frame[full.frame["S2"] > 0][["O0", "O1"]].reset_index(drop=True)
    pd.testing.assert_frame_equal(kept.frame, expected)
    assert kept.vertices == (0, 1)
    assert kept.n_raw == 500
    assert 0 < kept.n < 500


def test_selection_retaining_nothing_is_degenerate():
    g = _selected_system()
    frame = pd.DataFrame({"O0": [1.0, 2.0], "O1": [0.5, 0.1], "S2": [-1.0, -0.2]})
    with pytest.raises(DegenerateSelectionError):
        apply_selection(Dataset(frame, (0, 1, 2), 2), g)


def test_selection_drops_latent_columns(confounded_cycle_system):
    coeffs = np.zeros((6, 6))
    for i, j in confounded_cycle_system.edges:
        coeffs[j, i] = 0.5
    g = DirectedSystem.from_coeffs(coeffs, labels=confounded_cycle_system.labels)
    d = apply_selection(sample_equilibrium(g, 50, make_rng(0)), g)
    assert d.vertices == (0, 1, 2, 3, 4)
    assert d.n == 50


def test_dataset_binds_named_columns():
    frame = pd.DataFrame({"O3": [0.1, 0.2, 0.4], "O5": [1.0, 0.0, 2.0]})
    assert Dataset.from_frame(frame).vertices == (3, 5)
    plain = pd.DataFrame({"x": [0.1, 0.2], "y": [1.0, 0.0]})
    assert Dataset.from_frame(plain).vertices == (0, 1)


def test_dataset_rejects_non_finite_values():
    frame = pd.DataFrame({"O0": [0.1, np.nan]})
    with pytest.raises(ArithmeticError):
        Dataset.from_frame(frame)


def test_check_columns():
    assert check_columns([]) == "Dataset has no columns"
    assert check_columns(["O1", "O1"]) == "Dataset has duplicate column names"
    assert check_columns(["O1", "O2"]) is None


def test_vertex_labels_parse():
    assert VertexClass.from_symbol("l") is VertexClass.LATENT
    with pytest.raises(InputError):
        VertexClass.from_symbol("X")
