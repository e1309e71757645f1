"""
Application configuration for the CCI toolbox.
Provides AppConfig with paths, generation defaults and test thresholds.
"""

import json
from pathlib import Path

# Cache Path.cwd() so every default out dir in one process agrees
_cached_cwd = None


def _get_cwd() -> Path:
    """Get working directory, cached for the lifetime of the process."""
    global _cached_cwd
    if _cached_cwd is None:
        _cached_cwd = Path.cwd()
    return _cached_cwd


def _project_dir() -> Path:
    """Directory containing the project (config.json lives here)."""
    return Path(__file__).parent


# =============================================================================
# AppConfig: Central configuration for paths, defaults, and numeric guards
# =============================================================================


class _DefaultOutDir:
    """Descriptor for lazy computation of DEFAULT_OUT_DIR."""
    def __get__(self, obj, objtype=None):
        return str(_get_cwd() / "cci_runs")


class AppConfig:
    """Central application configuration."""

    APP_NAME = "CCI Toolbox"
    APP_VERSION = "1.0.0"

    DEFAULT_OUT_DIR = _DefaultOutDir()

    # Random system generation
    DEFAULT_COEF_RANGE = (0.1, 1.0)
    DEFAULT_LATENTS_MAX = 3
    DEFAULT_SELECT_MAX = 3
    RESAMPLE_BUDGET = 1000

    # (I - B) must satisfy both to be accepted
    DET_TOL = 1e-12
    COND_MAX = 1e8

    # Fisher-z: |r| is clamped to 1 - R_CLAMP before the log transform
    R_CLAMP = 1e-12

    # (max sample size, alpha); larger samples fall through to ALPHA_LARGE_N
    ALPHA_SCHEDULE = ((1000, 1e-2), (10000, 1e-3))
    ALPHA_LARGE_N = 1e-4

    SAMPLE_SIZES = (500, 1000, 5000, 10000, 50000, 100000)

    DEFAULT_JOBS = 1

    # Output file names written by the CLI
    GRAPH_FILE = "graph.txt"
    DATA_FILE = "data.csv"
    MANIFEST_FILE = "manifest.txt"
    OUTPUT_GRAPH_FILE = "output.graph.txt"
    TRACE_FILE = "trace.log"
    REPORT_FILE = "report.csv"

    # Paths
    PROJECT_DIR = _project_dir()
    CONFIG_JSON = _project_dir() / "config.json"

    # Default config written by `--init-config`
    DEFAULT_CONFIG = {
        "out_dir": "",
        "jobs": 1,
        "max_cond_size": None,
        "latents_max": 3,
        "select_max": 3,
        "coef_range": [0.1, 1.0],
        "record_wall_time": False,
    }


def ensure_config_exists() -> None:
    """Create config.json with default content if it does not exist."""
    path = AppConfig.CONFIG_JSON
    if path.exists():
        return
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(AppConfig.DEFAULT_CONFIG, indent=2, ensure_ascii=False),
            encoding="utf-8",
        )
    except OSError:
        pass
