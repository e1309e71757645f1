"""
Conditional-independence providers: the exact d-separation oracle and the
Gaussian Fisher-z test on data. Discovery code only sees the CiProvider
interface, so oracle and data runs share every line of the algorithm.
"""

import math
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.stats import norm

from config import AppConfig
from datagen import Dataset
from dsep_oracle import DsepQuery, d_connected
from errors import InputError, NumericError
from graph_core import DirectedSystem

CiKey = Tuple[int, int, FrozenSet[int]]


# =============================================================================
# Provider interface
# =============================================================================


class CiProvider(ABC):
    """Answers "is O_i independent of O_j given W" over observed indices 0..p_obs-1.

    Answers are memoized per unordered pair and set, so repeated queries are
    free and identical. ``query_count`` counts every call, cached or not.
    """

    def __init__(self, p_obs: int):
        self.p_obs = p_obs
        self._lock = threading.Lock()
        self._query_count = 0
        self._memo: Dict[CiKey, bool] = {}

    @property
    def query_count(self) -> int:
        return self._query_count

    @property
    def distinct_tests(self) -> int:
        return len(self._memo)

    def _validate(self, i: int, j: int, w: FrozenSet[int]) -> None:
        for v in (i, j, *w):
            if not 0 <= v < self.p_obs:
                raise InputError(f"Vertex id {v} out of range for p={self.p_obs}")
        if i == j:
            raise InputError(f"CI query needs two distinct vertices, got {i} twice")
        if i in w or j in w:
            raise InputError(f"Conditioning set {sorted(w)} contains a queried vertex ({i}, {j})")

    def independent(self, i: int, j: int, w: Iterable[int] = ()) -> bool:
        w = frozenset(w)
        self._validate(i, j, w)
        key = (min(i, j), max(i, j), w)
        with self._lock:
            self._query_count += 1
            cached = self._memo.get(key)
        if cached is not None:
            return cached
        answer = bool(self._test(key[0], key[1], tuple(sorted(w))))
        with self._lock:
            self._memo[key] = answer
        return answer

    @abstractmethod
    def _test(self, i: int, j: int, w: Tuple[int, ...]) -> bool:
        """Run the underlying test for i < j."""


class OracleCi(CiProvider):
    """Exact provider: independent iff d-separated given W ∪ S in the system."""

    def __init__(self, g: DirectedSystem):
        super().__init__(len(g.observed))
        self.system = g
        self._observed = g.observed
        self._selection = frozenset(g.selection)

    def _test(self, i: int, j: int, w: Tuple[int, ...]) -> bool:
        obs = self._observed
        cond = frozenset(obs[k] for k in w) | self._selection
        return not d_connected(self.system, DsepQuery(frozenset({obs[i]}), frozenset({obs[j]}), cond))


class CallbackCi(CiProvider):
    """Provider backed by a plain function; used for scripted test scenarios."""

    def __init__(self, p_obs: int, fn):
        super().__init__(p_obs)
        self._fn = fn

    def _test(self, i: int, j: int, w: Tuple[int, ...]) -> bool:
        return self._fn(i, j, frozenset(w))


# =============================================================================
# Fisher-z
# =============================================================================


@dataclass(frozen=True)
class FisherZConfig:
    alpha: float
    n: int

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InputError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.n < 1:
            raise InputError(f"Sample count must be positive, got {self.n}")


@dataclass(frozen=True)
class FisherZResult:
    independent: bool
    statistic: float
    pvalue: float
    r: float
    infinite: bool = False


def alpha_for_sample_size(n: int) -> float:
    """Significance level schedule: 1e-2 up to 1000 samples, 1e-3 up to 10000, else 1e-4."""
    if n < 1:
        raise InputError(f"Sample count must be positive, got {n}")
    for limit, alpha in AppConfig.ALPHA_SCHEDULE:
        if n <= limit:
            return alpha
    return AppConfig.ALPHA_LARGE_N


def partial_correlation(corr: np.ndarray, i: int, j: int, w: Sequence[int] = ()) -> float:
    """Partial correlation of i and j given w from a correlation matrix.

    Parameters
    ----------
    corr : np.ndarray of shape (p, p)
        Correlation (or covariance) matrix.
    i, j : int
        Queried variables.
    w : sequence of int
        Conditioning variables.

    Returns
    -------
    r : float
        ``-Θ_ij / sqrt(Θ_ii Θ_jj)`` where Θ is the inverse of the submatrix on
        {i, j} ∪ w, clipped to [-1, 1].
    """
    w = list(w)
    if not w:
        d = math.sqrt(corr[i, i] * corr[j, j])
        if d <= 0:
            raise NumericError(f"Degenerate variance for variables {i}, {j}")
        return float(np.clip(corr[i, j] / d, -1.0, 1.0))
    idx = [i, j] + w
    sub = corr[np.ix_(idx, idx)]
    try:
        factor = scipy.linalg.cho_factor(sub, lower=True, check_finite=True)
        theta = scipy.linalg.cho_solve(factor, np.eye(len(idx)))
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericError(f"Singular correlation submatrix for ({i}, {j} | {w}): {e}") from e
    denom = math.sqrt(theta[0, 0] * theta[1, 1])
    if not denom > 0:
        raise NumericError(f"Singular correlation submatrix for ({i}, {j} | {w})")
    return float(np.clip(-theta[0, 1] / denom, -1.0, 1.0))


def fisher_z_test(r: float, n: int, cond_size: int, alpha: float) -> FisherZResult:
    """Two-sided Fisher-z test of zero partial correlation."""
    dof = n - cond_size - 3
    if dof < 1:
        raise InputError(f"Need n - |W| - 3 >= 1, got n={n}, |W|={cond_size}")
    bound = 1.0 - AppConfig.R_CLAMP
    if abs(r) >= 1.0:
        return FisherZResult(False, math.inf, 0.0, r, infinite=True)
    rc = min(max(r, -bound), bound)
    z = 0.5 * math.log((1 + rc) / (1 - rc)) * math.sqrt(dof)
    critical = norm.ppf(1 - alpha / 2)
    pvalue = float(2 * norm.sf(abs(z)))
    return FisherZResult(bool(abs(z) <= critical), float(z), pvalue, r)


def fisher_z_independent(d: Dataset, cfg: FisherZConfig, i: int, j: int, w: Sequence[int] = ()) -> FisherZResult:
    """Fisher-z decision on dataset columns i, j given w."""
    corr = d.correlation()
    return fisher_z_test(partial_correlation(corr, i, j, w), cfg.n, len(w), cfg.alpha)


class FisherZCi(CiProvider):
    """Data provider: Gaussian partial-correlation test on a cached correlation matrix."""

    def __init__(self, dataset: Dataset, alpha: Optional[float] = None):
        if dataset.n == 0:
            raise InputError("Dataset has no rows")
        super().__init__(dataset.p_obs)
        self.dataset = dataset
        self.config = FisherZConfig(alpha if alpha is not None else alpha_for_sample_size(dataset.n), dataset.n)
        self._corr = dataset.correlation()
        self.records: Dict[CiKey, FisherZResult] = {}

    @property
    def alpha(self) -> float:
        return self.config.alpha

    def _test(self, i: int, j: int, w: Tuple[int, ...]) -> bool:
        r = partial_correlation(self._corr, i, j, w)
        result = fisher_z_test(r, self.config.n, len(w), self.config.alpha)
        self.records[(i, j, frozenset(w))] = result
        return result.independent
