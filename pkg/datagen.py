"""
Random linear Gaussian systems (cyclic or acyclic), latent/selection injection,
equilibrium sampling and selection filtering.

Coefficient convention: B[j][i] != 0 iff i -> j, so one equilibrium sample
solves X = B X + e with e ~ N(0, I).
"""

import re
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import AppConfig
from errors import DegenerateSelectionError, GenerationError, InputError, NumericError
from graph_core import DirectedSystem, VertexClass


@dataclass(frozen=True)
class GenConfig:
    """Parameters of one random system draw."""

    p: int
    expected_neighborhood: float
    cyclic: bool = True
    coef_range: Tuple[float, float] = AppConfig.DEFAULT_COEF_RANGE
    n_latent_max: int = AppConfig.DEFAULT_LATENTS_MAX
    n_select_max: int = AppConfig.DEFAULT_SELECT_MAX
    seed: int = 0

    def __post_init__(self):
        if self.p < 2:
            raise InputError(f"Need at least 2 vertices, got p={self.p}")
        low, high = self.coef_range
        if not 0 < low < high:
            raise InputError(f"Coefficient range must satisfy 0 < low < high, got {self.coef_range}")
        if not 0 <= self.expected_neighborhood < self.p:
            raise InputError(
                f"Expected neighbourhood size must lie in [0, p), got {self.expected_neighborhood} for p={self.p}"
            )
        if self.n_latent_max < 0 or self.n_select_max < 0:
            raise InputError("Latent and selection maxima must be non-negative")


def replicate_seed(seed: int, replicate: Optional[int] = None) -> int:
    """Integer seed of one sweep replicate; ``make_rng(replicate_seed(s, k))`` equals ``make_rng(s, k)``."""
    if replicate is None:
        return seed
    return int(np.random.SeedSequence([seed, replicate]).generate_state(1)[0])


def make_rng(seed: int, replicate: Optional[int] = None) -> np.random.Generator:
    """RNG for a run, or for one replicate of a sweep."""
    return np.random.default_rng(replicate_seed(seed, replicate))


# =============================================================================
# Random systems
# =============================================================================


def _fill_coefficients(mask: np.ndarray, cfg: GenConfig, rng: np.random.Generator) -> np.ndarray:
    low, high = cfg.coef_range
    # draw full matrices so the stream position never depends on the mask
    mags = rng.uniform(low, high, size=mask.shape)
    signs = np.where(rng.random(mask.shape) < 0.5, -1.0, 1.0)
    return np.where(mask, signs * mags, 0.0)


def is_safely_invertible(coeffs: np.ndarray) -> bool:
    """|det(I - B)| above the tolerance and condition number below the cap."""
    m = np.eye(coeffs.shape[0]) - coeffs
    if abs(np.linalg.det(m)) <= AppConfig.DET_TOL:
        return False
    return bool(np.linalg.cond(m) < AppConfig.COND_MAX)


def random_dcg(cfg: GenConfig, rng: np.random.Generator, log_fn=None) -> DirectedSystem:
    """Random directed graph with at least one cycle and invertible (I - B).

    Each off-diagonal entry is an edge with probability E(N) / (2p - 2).
    """
    log_fn = log_fn or (lambda msg, lvl="info": None)
    if not cfg.cyclic:
        raise InputError("random_dcg needs cfg.cyclic = True")
    p = cfg.p
    prob = cfg.expected_neighborhood / (2 * p - 2)
    for attempt in range(1, AppConfig.RESAMPLE_BUDGET + 1):
        mask = rng.random((p, p)) < prob
        np.fill_diagonal(mask, False)
        coeffs = _fill_coefficients(mask, cfg, rng)
        if not is_safely_invertible(coeffs):
            log_fn(f"Attempt {attempt}: (I - B) ill-conditioned, resampling", "debug")
            continue
        g = DirectedSystem.from_coeffs(coeffs)
        if not g.has_cycle():
            continue
        log_fn(f"Cyclic system with {len(g.edges)} edges after {attempt} attempt(s)", "debug")
        return g
    raise GenerationError(
        f"No cyclic, invertible system found in {AppConfig.RESAMPLE_BUDGET} attempts "
        f"(p={p}, E(N)={cfg.expected_neighborhood})"
    )


def random_dag(cfg: GenConfig, rng: np.random.Generator, log_fn=None) -> DirectedSystem:
    """Random DAG: each strictly lower-triangular entry is an edge with probability E(N) / (p - 1)."""
    log_fn = log_fn or (lambda msg, lvl="info": None)
    if cfg.cyclic:
        raise InputError("random_dag needs cfg.cyclic = False")
    p = cfg.p
    prob = cfg.expected_neighborhood / (p - 1)
    mask = np.tril(rng.random((p, p)) < prob, k=-1)
    coeffs = _fill_coefficients(mask, cfg, rng)
    g = DirectedSystem.from_coeffs(coeffs)
    log_fn(f"Acyclic system with {len(g.edges)} edges", "debug")
    return g


def inject_latent_selection(g: DirectedSystem, cfg: GenConfig, rng: np.random.Generator) -> DirectedSystem:
    """Relabel 0..n_latent_max common causes as latent, then 0..n_select_max
    vertices with at least two parents as selection.

    Pools use the original graph; counts are uniform and truncated to the pool size.
    """
    if any(lbl is not VertexClass.OBSERVED for lbl in g.labels):
        raise InputError("inject_latent_selection expects a fully observed system")
    labels = list(g.labels)

    latent_pool = [v for v in range(g.p) if len(g.children(v)) >= 2]
    n_latent = min(int(rng.integers(0, cfg.n_latent_max + 1)), len(latent_pool))
    latents = sorted(int(v) for v in rng.choice(latent_pool, size=n_latent, replace=False)) if n_latent else []
    for v in latents:
        labels[v] = VertexClass.LATENT

    select_pool = [v for v in range(g.p) if v not in latents and len(g.parents(v)) >= 2]
    n_select = min(int(rng.integers(0, cfg.n_select_max + 1)), len(select_pool))
    selected = sorted(int(v) for v in rng.choice(select_pool, size=n_select, replace=False)) if n_select else []
    for v in selected:
        labels[v] = VertexClass.SELECTION

    return g.with_labels(labels)


def generate_system(cfg: GenConfig, rng: np.random.Generator, log_fn=None) -> DirectedSystem:
    """Random system per cfg with latents and selection injected."""
    base = random_dcg(cfg, rng, log_fn) if cfg.cyclic else random_dag(cfg, rng, log_fn)
    return inject_latent_selection(base, cfg, rng)


# =============================================================================
# Datasets
# =============================================================================


_COLUMN_RE = re.compile(r"^[A-Za-z]*(\d+)$")


@dataclass
class Dataset:
    """Samples with one column per vertex; ``vertices[c]`` is the system id of column c."""

    frame: pd.DataFrame
    vertices: Tuple[int, ...]
    n_raw: int
    _corr: Optional[np.ndarray] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.vertices = tuple(int(v) for v in self.vertices)
        if len(self.vertices) != self.frame.shape[1]:
            raise InputError(f"{self.frame.shape[1]} columns bound to {len(self.vertices)} vertices")
        if len(set(self.vertices)) != len(self.vertices):
            raise InputError("Columns must be bound to distinct vertices")
        values = self.frame.to_numpy(dtype=float)
        if not np.isfinite(values).all():
            raise NumericError("Dataset contains NaN or infinite values")

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, n_raw: Optional[int] = None) -> "Dataset":
        """Bind columns named like ``O3`` to vertex 3; other names bind positionally."""
        vertices: List[int] = []
        for pos, name in enumerate(frame.columns):
            match = _COLUMN_RE.match(str(name).strip())
            vertices.append(int(match.group(1)) if match else pos)
        if len(set(vertices)) != len(vertices):
            vertices = list(range(frame.shape[1]))
        return cls(frame, tuple(vertices), len(frame) if n_raw is None else n_raw)

    @property
    def n(self) -> int:
        return len(self.frame)

    @property
    def p_obs(self) -> int:
        return self.frame.shape[1]

    @property
    def values(self) -> np.ndarray:
        return self.frame.to_numpy(dtype=float)

    def correlation(self) -> np.ndarray:
        """Column correlation matrix, computed once."""
        if self._corr is None:
            if self.n < 2:
                raise NumericError(f"Need at least 2 rows for a correlation matrix, got {self.n}")
            corr = np.atleast_2d(np.corrcoef(self.values, rowvar=False))
            if not np.isfinite(corr).all():
                raise NumericError("Correlation matrix is not finite (constant column?)")
            self._corr = corr
        return self._corr


def analytic_covariance(coeffs: np.ndarray) -> np.ndarray:
    """(I - B)^-1 (I - B)^-T, the equilibrium covariance under unit-variance errors."""
    inv = np.linalg.inv(np.eye(coeffs.shape[0]) - coeffs)
    return inv @ inv.T


def sample_equilibrium(g: DirectedSystem, n: int, rng: np.random.Generator) -> Dataset:
    """n i.i.d. equilibrium samples over all vertices of g."""
    if g.coeffs is None:
        raise InputError("System has no coefficient matrix")
    if n < 0:
        raise InputError(f"Sample count must be non-negative, got {n}")
    m = np.eye(g.p) - g.coeffs
    if abs(np.linalg.det(m)) <= AppConfig.DET_TOL:
        raise NumericError("(I - B) is singular")
    noise = rng.standard_normal((n, g.p))
    try:
        x = np.linalg.solve(m, noise.T).T
    except np.linalg.LinAlgError as e:
        raise NumericError(f"(I - B) is singular: {e}") from e
    columns = [g.vertex_name(v) for v in range(g.p)]
    return Dataset(pd.DataFrame(x, columns=columns), tuple(range(g.p)), n)


def apply_selection(d: Dataset, g: DirectedSystem) -> Dataset:
    """Keep rows where every selection variable is positive, then drop latent and selection columns."""
    position = {v: c for c, v in enumerate(d.vertices)}
    missing = [v for v in g.selection if v not in position]
    if missing:
        raise InputError(f"Dataset lacks columns for selection vertices {missing}")
    values = d.frame.to_numpy(dtype=float)
    keep = np.ones(d.n, dtype=bool)
    for v in g.selection:
        keep &= values[:, position[v]] > 0
    kept_cols = [c for c, v in enumerate(d.vertices) if g.labels[v] is VertexClass.OBSERVED]
    if not keep.any():
        raise DegenerateSelectionError(f"Selection on {list(g.selection)} retained 0 of {d.n} rows")
    frame = d.frame.iloc[np.flatnonzero(keep), kept_cols].reset_index(drop=True)
    return Dataset(frame, tuple(d.vertices[c] for c in kept_cols), d.n_raw)


def check_columns(names: Sequence[str]) -> Optional[str]:
    """Error message when dataset headers are missing or duplicated, else None."""
    if not names:
        return "Dataset has no columns"
    if len(set(names)) != len(names):
        return "Dataset has duplicate column names"
    return None
