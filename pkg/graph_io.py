"""
Text format for directed systems and mixed graphs, plus dataset CSV reading.

    # comment
    p 4
    labels O O L S
    names X1 X2 X3 X4        (optional)
    0 -> 1 0.7               (directed system; coefficient optional but all-or-none)
    0 o > 2                  (mixed graph: mark at 0, mark at 2)
"""

from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from datagen import Dataset, check_columns
from errors import InputError, NumericError
from graph_core import DirectedSystem, EndpointMark, MixedGraph, VertexClass

GraphKind = str
KINDS = ("directed", "mixed")


# =============================================================================
# Parsing
# =============================================================================


def _clean_lines(text: str) -> List[Tuple[int, List[str]]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((lineno, line.split()))
    return out


def _parse_int(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise InputError(f"Line {lineno}: expected an integer, got {token!r}") from None


def _parse_header(lines: List[Tuple[int, List[str]]]) -> Tuple[int, Optional[List[VertexClass]], Optional[List[str]], list]:
    """Split off the ``p``/``labels``/``names`` lines; returns the remaining edge lines."""
    if not lines or lines[0][1][0] != "p":
        raise InputError("Graph file must start with a 'p <count>' line")
    lineno, tokens = lines[0]
    if len(tokens) != 2:
        raise InputError(f"Line {lineno}: expected 'p <count>'")
    p = _parse_int(tokens[1], lineno)
    if p < 0:
        raise InputError(f"Line {lineno}: vertex count must be non-negative")
    labels = names = None
    rest = lines[1:]
    while rest and rest[0][1][0] in ("labels", "names"):
        lineno, tokens = rest.pop(0)
        values = tokens[1:]
        if len(values) != p:
            raise InputError(f"Line {lineno}: expected {p} entries after {tokens[0]!r}, got {len(values)}")
        if tokens[0] == "labels":
            try:
                labels = [VertexClass.from_symbol(s) for s in values]
            except ValueError as e:
                raise InputError(f"Line {lineno}: {e}") from None
        else:
            names = values
    return p, labels, names, rest


def parse_directed_system(text: str) -> DirectedSystem:
    p, labels, names, rest = _parse_header(_clean_lines(text))
    edges = []
    coeffs: Dict[Tuple[int, int], float] = {}
    for lineno, tokens in rest:
        if len(tokens) not in (3, 4) or tokens[1] != "->":
            raise InputError(f"Line {lineno}: expected 'i -> j [coef]', got {' '.join(tokens)!r}")
        i, j = _parse_int(tokens[0], lineno), _parse_int(tokens[2], lineno)
        if (i, j) in edges:
            raise InputError(f"Line {lineno}: duplicate edge {i} -> {j}")
        edges.append((i, j))
        if len(tokens) == 4:
            try:
                coeffs[(i, j)] = float(tokens[3])
            except ValueError:
                raise InputError(f"Line {lineno}: bad coefficient {tokens[3]!r}") from None
            if coeffs[(i, j)] == 0.0:
                raise InputError(f"Line {lineno}: coefficient of an edge must be nonzero")
    if coeffs and len(coeffs) != len(edges):
        raise InputError("Either every edge carries a coefficient or none does")
    labels = labels or [VertexClass.OBSERVED] * p
    matrix = None
    if coeffs:
        matrix = np.zeros((p, p))
        for (i, j), c in coeffs.items():
            if not (0 <= i < p and 0 <= j < p):
                raise InputError(f"Edge {i} -> {j} out of range for p={p}")
            matrix[j, i] = c
    return DirectedSystem(p, frozenset(edges), tuple(labels), matrix, tuple(names) if names else None)


def parse_mixed_graph(text: str) -> MixedGraph:
    p, labels, names, rest = _parse_header(_clean_lines(text))
    if labels and any(lbl is not VertexClass.OBSERVED for lbl in labels):
        raise InputError("A mixed graph is over observed vertices only")
    m = MixedGraph(p, names)
    for lineno, tokens in rest:
        if len(tokens) != 4:
            raise InputError(f"Line {lineno}: expected 'i <mark> <mark> j', got {' '.join(tokens)!r}")
        try:
            mark_i = EndpointMark.from_symbol(tokens[1])
            mark_j = EndpointMark.from_symbol(tokens[2])
        except ValueError as e:
            raise InputError(f"Line {lineno}: {e}") from None
        m.add_edge(_parse_int(tokens[0], lineno), _parse_int(tokens[3], lineno), mark_i, mark_j)
    return m


# =============================================================================
# Formatting
# =============================================================================


def format_directed_system(g: DirectedSystem) -> str:
    lines = [f"p {g.p}", "labels " + " ".join(lbl.value for lbl in g.labels)]
    if g.names:
        lines.append("names " + " ".join(g.names))
    for i, j in sorted(g.edges):
        if g.coeffs is None:
            lines.append(f"{i} -> {j}")
        else:
            lines.append(f"{i} -> {j} {float(g.coeffs[j, i])!r}")
    return "\n".join(lines) + "\n"


def format_mixed_graph(m: MixedGraph) -> str:
    lines = [f"p {m.p_obs}", "labels " + " ".join(VertexClass.OBSERVED.value for _ in range(m.p_obs))]
    if m.names:
        lines.append("names " + " ".join(m.names))
    for i, j, mark_i, mark_j in m.edges():
        lines.append(f"{i} {mark_i.value} {mark_j.value} {j}")
    return "\n".join(lines) + "\n"


# =============================================================================
# Files
# =============================================================================


def read_graph_file(path: Union[str, Path], kind: GraphKind) -> Tuple[Optional[Union[DirectedSystem, MixedGraph]], Optional[str]]:
    """
    Read a directed system or mixed graph from a text file.
    Returns (graph, None) on success, (None, error_message) on failure.
    """
    if kind not in KINDS:
        return None, f"Unknown graph kind {kind!r}"
    path = Path(path)
    if not path.exists():
        return None, f"File not found: {path}"
    try:
        text = path.read_text(encoding="utf-8")
        parse = parse_directed_system if kind == "directed" else parse_mixed_graph
        return parse(text), None
    except InputError as e:
        return None, f"{path}: {e}"
    except OSError as e:
        return None, f"Could not read {path}: {e}"


def write_graph_file(path: Union[str, Path], graph: Union[DirectedSystem, MixedGraph]) -> Path:
    path = Path(path)
    text = format_directed_system(graph) if isinstance(graph, DirectedSystem) else format_mixed_graph(graph)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def read_dataset(path: Union[str, Path], n_raw: Optional[int] = None) -> Tuple[Optional[Dataset], Optional[str]]:
    """
    Read a dataset CSV (header row of ``O<v>`` names, one sample per row).
    Returns (Dataset, None) on success, (None, error_message) on failure.
    """
    path = Path(path)
    if not path.exists():
        return None, f"File not found: {path}"
    try:
        # header=None keeps duplicate names visible; pandas would rename them
        raw = pd.read_csv(path, encoding="utf-8-sig", header=None, dtype=str)
    except pd.errors.EmptyDataError:
        return None, f"Dataset is empty: {path}"
    except (OSError, pd.errors.ParserError) as e:
        return None, f"Could not read {path}: {type(e).__name__}: {e}"
    columns = [str(c).strip() for c in raw.iloc[0]]
    err = check_columns(columns)
    if err:
        return None, f"{path}: {err}"
    frame = raw.iloc[1:].reset_index(drop=True)
    frame.columns = columns
    if frame.empty:
        return None, f"Dataset has no rows: {path}"
    try:
        frame = frame.apply(pd.to_numeric, errors="raise")
        return Dataset.from_frame(frame, n_raw), None
    except (ValueError, TypeError, NumericError) as e:
        return None, f"{path}: non-numeric or invalid values: {e}"
