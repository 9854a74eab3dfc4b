import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cqdyn.entanglement import (
    entropies, entropies_from_chi, entropy_series, entropy_time_average, purity_direct,
    reduced_density,
)
from cqdyn.errors import DimensionError, ValidationError
from cqdyn.evolve import run_scheme, time_grid


def test_product_state_has_zero_entropy():
    z = np.outer([0.6, 0.8j], [1, 0, 0])
    rec = entropies(z)
    assert abs(rec.s_vn) < 1e-14 and abs(rec.s_lin) < 1e-14 and np.isclose(rec.purity, 1)


def test_schmidt_state():
    p = 0.3
    z = np.diag([np.sqrt(p), np.sqrt(1 - p)])
    rec = entropies(z)
    assert np.isclose(rec.s_vn, -p * np.log(p) - (1 - p) * np.log(1 - p), atol=1e-14)
    assert np.isclose(rec.s_lin, 1 - p * p - (1 - p) ** 2, atol=1e-14)


@pytest.mark.parametrize("d", [2, 4, 8])
def test_maximally_mixed(d):
    rec = entropies(np.eye(d) / np.sqrt(d))
    assert abs(rec.s_vn - np.log(d)) < 1e-10
    assert abs(rec.s_lin - (1 - 1 / d)) < 1e-12


def test_reduced_density_traces(rng):
    z = rng.normal(size=(3, 5)) + 1j * rng.normal(size=(3, 5))
    z /= np.linalg.norm(z)
    r1, r2 = reduced_density(z)
    assert np.isclose(np.trace(r1), 1) and np.isclose(np.trace(r2), 1)
    assert np.allclose(np.sort(np.linalg.eigvalsh(r1)), np.sort(np.linalg.eigvalsh(r2))[-3:])
    with pytest.raises(DimensionError):
        reduced_density(np.ones(3))


def test_clamp_drops_tiny_weights():
    chi = np.array([1.0, 1e-9])
    _, _, s = entropies_from_chi(chi)
    assert s == 0.0


finite = st.floats(-1, 1, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (2, 3, 4), elements=finite))
def test_entropy_bounds_property(parts):
    z = parts[0] + 1j * parts[1]
    n = np.linalg.norm(z)
    if n < 1e-6:
        return
    z = z / n
    rec = entropies(z)
    d = 3
    assert -1e-12 <= rec.s_vn <= np.log(d) + 1e-12
    assert -1e-12 <= rec.s_lin <= 1 - 1 / d + 1e-12
    assert np.isclose(rec.purity, purity_direct(z), atol=1e-12)
    # entropy is the same seen from either subsystem
    assert np.isclose(entropies(z.T).s_vn, rec.s_vn, atol=1e-12)


def test_series_and_time_average(small_cfg):
    tr = run_scheme(small_cfg, "qq-spectral", time_grid(10.0, 0.5))
    s_lin, s_vn = entropy_series(tr.states)
    assert np.allclose(s_vn, tr["S_vn"]) and np.allclose(s_lin, tr["S_lin"])
    mean = entropy_time_average(tr)
    assert np.isclose(mean, np.mean(tr["S_vn"][tr.times > 2.0]))
    assert np.isclose(entropy_time_average(tr, burn_in=5.0), np.mean(tr["S_vn"][tr.times > 5.0]))
    with pytest.raises(ValidationError):
        entropy_time_average(tr, burn_in=10.0)
    with pytest.raises(ValidationError):
        entropy_time_average(run_scheme(small_cfg, "cc", time_grid(1.0, 0.5)))
