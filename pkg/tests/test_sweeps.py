import pytest

from baselines_eval import ReportRow
from datagen import GenConfig, replicate_seed
from errors import InputError
from sweeps import SweepConfig, run_replicate, run_sweep, simulate, summarize


def _config(**kwargs):
    gen = GenConfig(p=5, expected_neighborhood=2, n_latent_max=1, n_select_max=1, seed=kwargs.pop("seed", 11))
    return SweepConfig(gen=gen, **kwargs)


def test_sweep_config_validation():
    with pytest.raises(InputError):
        _config(n=100, replicates=0)
    with pytest.raises(InputError):
        _config(n=0)
    with pytest.raises(InputError):
        _config(n=100, algorithms=("cci", "ges"))
    assert _config(n=0, oracle=True).n == 0


def test_simulation_is_reproducible_per_replicate():
    gen = GenConfig(p=6, expected_neighborhood=2, seed=3)
    a = simulate(gen, 300, replicate=2)
    b = simulate(gen, 300, replicate=2)
    assert a.truth == b.truth
    assert a.data.frame.equals(b.data.frame)
    assert a.full.n == 300
    assert a.data.vertices == a.truth.observed


def test_simulation_without_samples():
    sim = simulate(GenConfig(p=4, expected_neighborhood=1, seed=1), 0, sample=False)
    assert sim.data is None and sim.full is None


def test_oracle_sweep_scores_zero():
    rows = run_sweep(_config(n=0, oracle=True, replicates=3, algorithms=("cci", "fci-fragment")))
    assert len(rows) == 6
    assert all(row.shd_total == 0 for row in rows)
    assert all(row.n == 0 and row.wall_ms == 0 for row in rows)
    assert [row.algorithm for row in rows[:2]] == ["cci", "fci-fragment"]


def test_data_sweep_is_deterministic():
    cfg = _config(n=500, replicates=2)
    first = run_sweep(cfg)
    second = run_sweep(cfg)
    assert first == second
    assert all(row.p == 5 and row.cyclic for row in first)
    assert all(row.n_ci_queries > 0 for row in first)


def test_rows_carry_the_replicate_seed():
    cfg = _config(n=0, oracle=True, replicates=3, algorithms=("cci", "fci-fragment"))
    for k in range(3):
        rows = run_replicate(cfg, k)
        assert {row.seed for row in rows} <= {replicate_seed(11, k)}
        if rows:
            regenerated = simulate(GenConfig(p=5, expected_neighborhood=2, n_latent_max=1, n_select_max=1,
                                             seed=rows[0].seed), 0, sample=False)
            assert regenerated.truth == simulate(cfg.gen, 0, k, sample=False).truth


def test_replicates_concatenate_to_the_sweep():
    cfg = _config(n=500, replicates=3)
    rows = run_sweep(cfg)
    assert [row for k in range(3) for row in run_replicate(cfg, k)] == rows


@pytest.mark.slow
def test_parallel_sweep_matches_serial():
    serial = run_sweep(_config(n=500, replicates=4, jobs=1))
    parallel = run_sweep(_config(n=500, replicates=4, jobs=2))
    assert serial == parallel


def test_summary_lines():
    rows = [
        ReportRow(1, 5, 100, True, "cci", 2, 0, 2, 30),
        ReportRow(1, 5, 100, True, "cci", 4, 1, 3, 50),
        ReportRow(1, 5, 100, True, "fci-fragment", 6, 1, 5, 20),
    ]
    assert summarize(rows) == [
        "cci: 2 run(s), mean SHD 3.00, mean CI queries 40.0",
        "fci-fragment: 1 run(s), mean SHD 6.00, mean CI queries 20.0",
    ]
