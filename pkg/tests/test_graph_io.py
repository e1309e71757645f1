import numpy as np
import pandas as pd
import pytest

from conftest import L, O, S
from errors import InputError
from graph_io import (
    format_directed_system,
    format_mixed_graph,
    parse_directed_system,
    parse_mixed_graph,
    read_dataset,
    read_graph_file,
    write_graph_file,
)

SYSTEM_TEXT = """\
# three vertices, one of them latent
p 3
labels O L S
0 -> 2 0.5
1 -> 2 -1.25
1 -> 0 0.3
"""


def test_parse_directed_system():
    g = parse_directed_system(SYSTEM_TEXT)
    assert g.p == 3
    assert g.labels == (O, L, S)
    assert g.edges == frozenset({(0, 2), (1, 2), (1, 0)})
    assert g.coeffs[2, 1] == -1.25
    assert g.coeffs[0, 1] == 0.3


def test_directed_system_text_is_stable(confounded_cycle_system):
    text = format_directed_system(confounded_cycle_system)
    assert format_directed_system(parse_directed_system(text)) == text
    assert text.splitlines()[:3] == ["p 6", "labels O O O O O L", "names O1 O2 O3 O4 O5 L1"]


def test_coefficients_survive_formatting(two_cycle_system):
    again = parse_directed_system(format_directed_system(two_cycle_system))
    assert np.array_equal(again.coeffs, two_cycle_system.coeffs)
    assert again.names == two_cycle_system.names


def test_mixed_graph_text(cci_final):
    text = format_mixed_graph(cci_final)
    assert "0 o > 1" in text.splitlines()
    assert "1 - - 2" in text.splitlines()
    parsed = parse_mixed_graph(text)
    assert parsed == cci_final
    assert parsed.names == cci_final.names


@pytest.mark.parametrize("text", [
    "0 -> 1\n",
    "p 2\n0 -> 1 0.5\n1 -> 0\n",
    "p 2\n0 -> 1 0\n",
    "p 2\n0 -> 1\n0 -> 1\n",
    "p 2\nlabels O\n",
    "p 2\nlabels O X\n",
    "p 2\n0 => 1\n",
    "p x\n",
])
def test_bad_directed_text(text):
    with pytest.raises(InputError):
        parse_directed_system(text)


@pytest.mark.parametrize("text", [
    "p 2\nlabels O L\n0 o o 1\n",
    "p 2\n0 o x 1\n",
    "p 2\n0 o 1\n",
    "p 2\n0 o o 1\n1 o o 0\n",
])
def test_bad_mixed_text(text):
    with pytest.raises(InputError):
        parse_mixed_graph(text)


def test_graph_files(tmp_path, two_cycle_system, cci_final):
    write_graph_file(tmp_path / "truth.txt", two_cycle_system)
    write_graph_file(tmp_path / "out" / "graph.txt", cci_final)
    g, err = read_graph_file(tmp_path / "truth.txt", "directed")
    assert err is None and g == two_cycle_system
    m, err = read_graph_file(tmp_path / "out" / "graph.txt", "mixed")
    assert err is None and m == cci_final


def test_graph_file_errors(tmp_path):
    g, err = read_graph_file(tmp_path / "missing.txt", "directed")
    assert g is None and err.startswith("File not found")
    bad = tmp_path / "bad.txt"
    bad.write_text("p 2\n0 -> 5\n", encoding="utf-8")
    g, err = read_graph_file(bad, "directed")
    assert g is None and "bad.txt" in err
    g, err = read_graph_file(bad, "pag")
    assert g is None and "Unknown graph kind" in err


def test_read_dataset(tmp_path):
    path = tmp_path / "data.csv"
    pd.DataFrame({"O0": [0.5, -1.0, 2.0], "O2": [1.0, 0.0, -0.5]}).to_csv(path, index=False)
    d, err = read_dataset(path, n_raw=10)
    assert err is None
    assert d.vertices == (0, 2)
    assert (d.n, d.n_raw) == (3, 10)


@pytest.mark.parametrize("content, message", [
    ("", "empty"),
    ("O0,O1\n", "no rows"),
    ("O0,O0\n1,2\n", "duplicate"),
    ("O0,O1\n1,abc\n", "non-numeric"),
])
def test_read_dataset_errors(tmp_path, content, message):
    path = tmp_path / "data.csv"
    path.write_text(content, encoding="utf-8")
    d, err = read_dataset(path)
    assert d is None
    assert message in err
