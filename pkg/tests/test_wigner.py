import json

import numpy as np
import pytest

from cqdyn.errors import DimensionError, UnsupportedError, ValidationError
from cqdyn.model import coherent_vector
from cqdyn.wigner import (
    WignerTable, default_axis, hermite_functions, wigner_distribution, wigner_matrix,
    wigner_matrix_quadrature,
)


def test_hermite_functions_orthonormal():
    x = np.linspace(-12, 12, 4001)
    h = hermite_functions(10, x)
    gram = h @ h.T * (x[1] - x[0])
    assert np.allclose(gram, np.eye(10), atol=1e-10)


@pytest.mark.parametrize("q,p", [(0.0, 0.0), (0.7, -1.3), (-2.1, 0.4), (1.5, 2.5)])
def test_closed_form_matches_quadrature(q, p):
    a = wigner_matrix(16, q, p)
    b = wigner_matrix_quadrature(16, q, p)
    assert np.max(np.abs(a - b)) < 1e-8
    assert np.allclose(a, a.conj().T)


def test_vacuum_and_parity():
    s = wigner_matrix(6, 0.0, 0.0)
    assert np.allclose(np.diag(s).real * np.pi, [1, -1, 1, -1, 1, -1])
    q = np.linspace(-3, 3, 13)
    rho = np.zeros((1, 1))
    rho[0, 0] = 1
    w = wigner_distribution(rho, q, q)
    qq, pp = np.meshgrid(q, q, indexing="ij")
    assert np.allclose(w.values, np.exp(-qq**2 - pp**2) / np.pi)


def test_coherent_state_frame():
    beta = 1.1 + 0.9j
    z = coherent_vector(beta, 30)
    rho = np.outer(z, z.conj())
    w = wigner_distribution(rho)
    assert abs(w.normalization() - 1) < 1e-3
    qp, pp = w.peak()
    cell = default_axis()[1] - default_axis()[0]
    assert abs(qp - np.sqrt(2) * beta.real) <= cell and abs(pp - np.sqrt(2) * beta.imag) <= cell


def test_table_matches_direct(rng):
    z = rng.normal(size=6) + 1j * rng.normal(size=6)
    z /= np.linalg.norm(z)
    rho = 0.5 * np.outer(z, z.conj()) + 0.5 * np.diag([1, 0, 0, 0, 0, 0])
    axis = np.linspace(-4, 4, 21)
    a = WignerTable(6, axis, axis).evaluate(rho)
    b = wigner_distribution(rho, axis, axis)
    assert np.allclose(a.values, b.values, atol=1e-14)


def test_input_checks():
    with pytest.raises(ValidationError):
        wigner_distribution(np.diag([0.5, 0.4]))
    with pytest.raises(ValidationError):
        wigner_distribution(np.array([[1.0, 0.3], [0.0, 0.0]]))
    with pytest.raises(DimensionError):
        wigner_distribution(np.ones((2, 3)))
    with pytest.raises(UnsupportedError):
        wigner_matrix(65, 0.0, 0.0)
    with pytest.raises(DimensionError):
        WignerTable(3, np.zeros(2), np.zeros(2)).evaluate(np.eye(2) / 2)


def test_grid_io(tmp_path):
    axis = np.linspace(-2, 2, 5)
    w = wigner_distribution(np.eye(2) / 2, axis, axis, meta={"tau": 1.0})
    w.to_csv(tmp_path / "w.csv")
    lines = (tmp_path / "w.csv").read_text().splitlines()
    assert lines[0].startswith("# meta=") and lines[1] == "# q,p,W"
    data = np.loadtxt(tmp_path / "w.csv", delimiter=",")
    assert data.shape == (25, 3) and np.allclose(data[:, 2], w.values.ravel())
    w.save_npz(tmp_path / "w.npz")
    with np.load(tmp_path / "w.npz") as f:
        assert np.array_equal(f["W"], w.values)
    meta = json.loads((tmp_path / "w.json").read_text())
    assert meta["tau"] == 1.0 and meta["q_range"] == [-2.0, 2.0, 5]
