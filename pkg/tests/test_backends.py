import os
import subprocess
import sys

import numpy as np
import pytest

from cqdyn import BACKEND
from cqdyn._backend import get_kernels
from cqdyn.evolve import substeps, time_grid
from cqdyn.model import coherent_vector, oscillator_system, q_power, qq_initial_state

from conftest import random_hermitian, random_state

try:
    get_kernels("cython")
    HAVE_EXT = True
except ImportError:
    HAVE_EXT = False

needs_ext = pytest.mark.skipif(not HAVE_EXT, reason="compiled kernels not built")


@pytest.fixture
def grid():
    return substeps(time_grid(1.0, 0.1), 1e-3)


@needs_ext
def test_rk4_qq_equivalent(small_cfg, grid):
    spec = oscillator_system(small_cfg)
    z0 = qq_initial_state(small_cfg)
    args = (z0, spec.e1, spec.e2, spec.v1, spec.v2, spec.lam) + grid
    a = get_kernels("cython").rk4_qq(*args)
    b = get_kernels("python").rk4_qq(*args)
    assert np.max(np.abs(a - b)) < 1e-13


@needs_ext
def test_rk4_qq_complex_coupling_equivalent(rng, grid):
    d1, d2 = 4, 3
    z0 = random_state(rng, d1, d2)
    args = (z0, rng.normal(size=d1), rng.normal(size=d2), random_hermitian(rng, d1),
            random_hermitian(rng, d2), 0.3) + grid
    a = get_kernels("cython").rk4_qq(*args)
    b = get_kernels("python").rk4_qq(*args)
    assert np.max(np.abs(a - b)) < 1e-13


@needs_ext
def test_rk4_cq_equivalent(small_cfg, grid):
    d2 = small_cfg.dims[1]
    z0 = coherent_vector(small_cfg.beta, d2)
    e2 = small_cfg.omega2 * (np.arange(d2) + 0.5)
    v = q_power(d2, 2).astype(complex)
    for back in (True, False):
        args = (complex(small_cfg.alpha), z0, 0.0, 1.0, e2, v, small_cfg.lam, 2, back) + grid
        a1, z1 = get_kernels("cython").rk4_cq(*args)
        a2, z2 = get_kernels("python").rk4_cq(*args)
        assert np.max(np.abs(a1 - a2)) < 1e-13
        assert np.max(np.abs(z1 - z2)) < 1e-13


@needs_ext
def test_rk4_cc_equivalent(small_cfg, grid):
    args = (complex(small_cfg.alpha), complex(small_cfg.beta), 1.0, 1.0, small_cfg.lam, 2) + grid
    a1, b1, s1, _ = get_kernels("cython").rk4_cc(*args)
    a2, b2, s2, _ = get_kernels("python").rk4_cc(*args)
    assert s1 == s2 == 0
    assert np.max(np.abs(a1 - a2)) < 1e-13 and np.max(np.abs(b1 - b2)) < 1e-13


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_kernels("fortran")


def test_environment_forces_fallback():
    env = dict(os.environ, CQDYN_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import cqdyn; print(cqdyn.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_default_backend_reported():
    assert BACKEND in ("cython", "python")
    if HAVE_EXT and not os.environ.get("CQDYN_PURE_PYTHON"):
        assert BACKEND == "cython"
