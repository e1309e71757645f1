"""
Seeded replicate pipeline: generate a system, sample and select data, run the
chosen algorithms and score each against its corrected oracle graph.

Replicate k of a sweep with seed s draws everything from make_rng(s, k). Its report
rows carry replicate_seed(s, k), which regenerates the replicate on its own
(``generate --seed`` with that value, or ``generate --seed s --replicate k``).
"""

import time
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from joblib import Parallel, delayed

from baselines_eval import ALGORITHMS, ReportRow, reference_graph, run_algorithm, shd
from ci import CiProvider, FisherZCi, OracleCi
from config import AppConfig
from datagen import Dataset, GenConfig, apply_selection, generate_system, make_rng, replicate_seed, sample_equilibrium
from errors import DegenerateSelectionError, InputError
from graph_core import DirectedSystem


@dataclass(frozen=True)
class SweepConfig:
    gen: GenConfig
    n: int
    replicates: int = 1
    algorithms: Tuple[str, ...] = ("cci",)
    oracle: bool = False
    alpha: Optional[float] = None
    max_cond_size: Optional[int] = None
    record_wall_time: bool = False
    jobs: int = AppConfig.DEFAULT_JOBS

    def __post_init__(self):
        if self.replicates < 1:
            raise InputError(f"Need at least one replicate, got {self.replicates}")
        if self.n < 1 and not self.oracle:
            raise InputError(f"Sample count must be positive, got {self.n}")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise InputError(f"Unknown algorithm(s) {', '.join(unknown)}; choose from {', '.join(ALGORITHMS)}")


@dataclass
class Simulation:
    """One replicate's ground truth and (for data runs) its selected dataset."""

    truth: DirectedSystem
    full: Optional[Dataset] = None
    data: Optional[Dataset] = None


def simulate(gen: GenConfig, n: int, replicate: Optional[int] = None, sample: bool = True, log_fn=None) -> Simulation:
    """Generate a system and, when ``sample``, n equilibrium samples filtered by selection.

    Raises DegenerateSelectionError when no sample survives selection.
    """
    log_fn = log_fn or (lambda msg, lvl="info": None)
    rng = make_rng(gen.seed, replicate)
    truth = generate_system(gen, rng, log_fn)
    log_fn(
        f"System: p={truth.p}, {len(truth.edges)} edges, latent={list(truth.latent)}, "
        f"selection={list(truth.selection)}",
        "debug",
    )
    if not sample:
        return Simulation(truth)
    full = sample_equilibrium(truth, n, rng)
    data = apply_selection(full, truth)
    log_fn(f"Retained {data.n} of {n} samples after selection", "debug")
    return Simulation(truth, full, data)


def _provider(sim: Simulation, cfg: SweepConfig) -> CiProvider:
    if cfg.oracle:
        return OracleCi(sim.truth)
    return FisherZCi(sim.data, cfg.alpha)


def run_replicate(cfg: SweepConfig, replicate: int, log_fn=None) -> List[ReportRow]:
    """Report rows of one replicate, one per algorithm; empty when selection is degenerate."""
    log_fn = log_fn or (lambda msg, lvl="info": None)
    try:
        sim = simulate(cfg.gen, cfg.n, replicate, sample=not cfg.oracle, log_fn=log_fn)
    except DegenerateSelectionError as e:
        log_fn(f"Replicate {replicate}: {e}; skipped", "warn")
        return []
    truth = sim.truth
    names = truth.observed_names()
    n = 0 if cfg.oracle else sim.data.n
    seed = replicate_seed(cfg.gen.seed, replicate)
    rows = []
    for algorithm in cfg.algorithms:
        ci = _provider(sim, cfg)
        start = time.perf_counter()
        state = run_algorithm(algorithm, ci, len(truth.observed), names, cfg.max_cond_size)
        wall_ms = int(round((time.perf_counter() - start) * 1000)) if cfg.record_wall_time else 0
        reference = reference_graph(truth, algorithm)
        result = shd(state.graph, reference)
        rows.append(ReportRow.build(seed, truth.p, n, cfg.gen.cyclic, algorithm, result,
                                    ci.query_count, wall_ms))
        log_fn(f"Replicate {replicate} {algorithm}: SHD {result.total}", "debug")
    return rows


def run_sweep(cfg: SweepConfig, log_fn=None) -> List[ReportRow]:
    """All replicates in index order; parallel across replicates when ``cfg.jobs`` > 1."""
    log_fn = log_fn or (lambda msg, lvl="info": None)
    log_fn(f"Sweep: {cfg.replicates} replicate(s), algorithms {', '.join(cfg.algorithms)}, jobs={cfg.jobs}")
    if cfg.jobs == 1:
        per_replicate = [run_replicate(cfg, k, log_fn) for k in range(cfg.replicates)]
    else:
        # worker processes cannot reach the caller's logger
        per_replicate = Parallel(n_jobs=cfg.jobs)(
            delayed(run_replicate)(cfg, k) for k in range(cfg.replicates)
        )
    rows = [row for chunk in per_replicate for row in chunk]
    skipped = sum(1 for chunk in per_replicate if not chunk)
    if skipped:
        log_fn(f"{skipped} replicate(s) skipped after degenerate selection", "warn")
    return rows


def summarize(rows: Sequence[ReportRow]) -> List[str]:
    """Mean SHD and CI query count per algorithm, in first-seen order."""
    by_algorithm = {}
    for row in rows:
        by_algorithm.setdefault(row.algorithm, []).append(row)
    lines = []
    for algorithm, group in by_algorithm.items():
        mean_shd = sum(r.shd_total for r in group) / len(group)
        mean_q = sum(r.n_ci_queries for r in group) / len(group)
        lines.append(f"{algorithm}: {len(group)} run(s), mean SHD {mean_shd:.2f}, mean CI queries {mean_q:.1f}")
    return lines
