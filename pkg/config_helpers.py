"""
Configuration helpers for loading and saving toolbox settings.
"""

import json
import os
from typing import Optional, Tuple

from config import AppConfig


def _load_config() -> dict:
    """Load config.json if it exists."""
    if AppConfig.CONFIG_JSON.exists():
        try:
            return json.loads(AppConfig.CONFIG_JSON.read_text(encoding="utf-8"))
        except Exception:
            pass
    return {}


def _parse_int(val, default: Optional[int]) -> Optional[int]:
    """Parse a non-negative int, falling back to default."""
    if val is None or isinstance(val, bool):
        return default
    try:
        out = int(val)
    except (TypeError, ValueError):
        return default
    return out if out >= 0 else default


def get_default_out_dir() -> str:
    """Get output directory from env, config.json, or the working-directory default."""
    path = os.environ.get("CCI_OUT_DIR", "").strip()
    if not path:
        path = (_load_config().get("out_dir") or "").strip()
    return path or AppConfig.DEFAULT_OUT_DIR


def get_default_jobs() -> int:
    """Get number of parallel replicate workers. Default: 1."""
    env = os.environ.get("CCI_JOBS", "").strip()
    if env:
        return _parse_int(env, AppConfig.DEFAULT_JOBS) or AppConfig.DEFAULT_JOBS
    return _parse_int(_load_config().get("jobs"), AppConfig.DEFAULT_JOBS) or AppConfig.DEFAULT_JOBS


def get_max_cond_size() -> Optional[int]:
    """Get conditioning-set size cap for data runs. None means uncapped."""
    return _parse_int(_load_config().get("max_cond_size"), None)


def get_latents_max() -> int:
    """Get maximum number of injected latent common causes. Default: 3."""
    return _parse_int(_load_config().get("latents_max"), AppConfig.DEFAULT_LATENTS_MAX)


def get_select_max() -> int:
    """Get maximum number of injected selection vertices. Default: 3."""
    return _parse_int(_load_config().get("select_max"), AppConfig.DEFAULT_SELECT_MAX)


def get_coef_range() -> Tuple[float, float]:
    """Get (low, high) magnitude range for edge coefficients. Default: (0.1, 1.0)."""
    raw = _load_config().get("coef_range")
    if isinstance(raw, (list, tuple)) and len(raw) == 2:
        try:
            low, high = float(raw[0]), float(raw[1])
        except (TypeError, ValueError):
            return AppConfig.DEFAULT_COEF_RANGE
        if 0 < low < high:
            return low, high
    return AppConfig.DEFAULT_COEF_RANGE


def get_record_wall_time() -> bool:
    """Whether report rows and manifests carry wall-clock timings."""
    return bool(_load_config().get("record_wall_time", False))


def save_config_updates(updates: dict) -> None:
    """Update config.json with given key-value pairs."""
    cfg = _load_config()
    cfg.update(updates)
    AppConfig.CONFIG_JSON.write_text(json.dumps(cfg, indent=2, ensure_ascii=False), encoding="utf-8")
