import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from krafty import Assignment, InputError, Spectrum, hierarchical_complete
from krafty.io import (
    read_assignment,
    read_dendrogram,
    read_matrix,
    read_spectrum,
    write_assignment,
    write_dendrogram,
    write_matrix,
    write_spectrum,
)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_matrix_round_trip_exact(rows, cols, seed):
    gen = np.random.default_rng(seed)
    m = gen.standard_normal((rows, cols)) * 10.0 ** gen.integers(-8, 8)
    with tempfile.TemporaryDirectory() as tmp:
        p = Path(tmp) / "m.csv"
        write_matrix(p, m)
        np.testing.assert_array_equal(read_matrix(p), m)


def test_matrix_errors(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,2\n3\n")
    with pytest.raises(InputError, match=":2:"):
        read_matrix(p)
    p.write_text("1,x\n")
    with pytest.raises(InputError, match=":1:"):
        read_matrix(p)
    p.write_text("")
    with pytest.raises(InputError):
        read_matrix(p)
    with pytest.raises(InputError):
        read_matrix(tmp_path / "missing.csv")


def test_assignment_round_trip(tmp_path):
    p = tmp_path / "z.csv"
    z = Assignment([0, 2, 1, 1, 0])
    write_assignment(p, z)
    assert p.read_text() == "0\n2\n1\n1\n0\n"
    np.testing.assert_array_equal(read_assignment(p).labels, [0, 1, 2, 2, 0])


def test_assignment_errors(tmp_path):
    p = tmp_path / "z.csv"
    p.write_text("0\n1.5\n")
    with pytest.raises(InputError, match=":2:"):
        read_assignment(p)
    p.write_text("0\n-1\n")
    with pytest.raises(InputError, match=":2:"):
        read_assignment(p)


def test_spectrum_round_trip(tmp_path):
    p = tmp_path / "s.csv"
    write_spectrum(p, Spectrum([3.0, 3.0, 1.0]))
    assert p.read_text().splitlines() == ["index,value,gap", "1,3.0,0.0", "2,3.0,2.0", "3,1.0,"]
    np.testing.assert_array_equal(read_spectrum(p).values, [3, 3, 1])


def test_spectrum_bare_column(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("5\n4\n1\n")
    np.testing.assert_array_equal(read_spectrum(p).values, [5, 4, 1])
    p.write_text("1\n4\n")
    with pytest.raises(InputError):
        read_spectrum(p)


def test_dendrogram_round_trip(tmp_path, rng):
    d = hierarchical_complete(rng.standard_normal((12, 2)))
    p = tmp_path / "d.csv"
    write_dendrogram(p, d)
    back = read_dendrogram(p)
    assert back.records() == d.records()


def test_dendrogram_bad_header(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b\n")
    with pytest.raises(InputError):
        read_dendrogram(p)
