"""
Export functions for datasets, evaluation reports, run manifests and trace logs.
"""

from pathlib import Path
from typing import Iterable, List, Mapping, Union

import pandas as pd

from baselines_eval import REPORT_COLUMNS, ReportRow
from cci import TraceEntry
from datagen import Dataset

PathLike = Union[str, Path]


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def export_dataset_to_csv(d: Dataset, path: PathLike) -> Path:
    """Export samples to CSV, one ``O<v>`` column per observed vertex."""
    path = _prepare(path)
    d.frame.to_csv(path, index=False, encoding="utf-8-sig")
    return path


def report_frame(rows: Iterable[ReportRow]) -> pd.DataFrame:
    records = [row.as_dict() for row in rows]
    frame = pd.DataFrame.from_records(records, columns=list(REPORT_COLUMNS))
    frame["cyclic"] = frame["cyclic"].astype(int)
    return frame


def export_report_to_csv(rows: Iterable[ReportRow], path: PathLike) -> Path:
    """Export report rows to CSV."""
    path = _prepare(path)
    report_frame(rows).to_csv(path, index=False, encoding="utf-8-sig")
    return path


def export_report_to_excel(rows: Iterable[ReportRow], path: PathLike) -> Path:
    """Export report rows to Excel."""
    path = _prepare(path)
    report_frame(rows).to_excel(path, index=False, engine="openpyxl", sheet_name="report")
    return path


def format_manifest(values: Mapping[str, object]) -> str:
    lines: List[str] = []
    for key, value in values.items():
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, bool):
            value = int(value)
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def write_manifest(values: Mapping[str, object], path: PathLike) -> Path:
    """key=value lines in insertion order."""
    path = _prepare(path)
    path.write_text(format_manifest(values), encoding="utf-8")
    return path


def read_manifest(path: PathLike) -> dict:
    values = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        key, sep, value = line.partition("=")
        if sep:
            values[key.strip()] = value.strip()
    return values


def write_trace(entries: Iterable[TraceEntry], path: PathLike) -> Path:
    path = _prepare(path)
    path.write_text("".join(e.to_line() + "\n" for e in entries), encoding="utf-8")
    return path
