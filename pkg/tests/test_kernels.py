import os
import subprocess
import sys

import numpy as np
import pytest

from artifact import _pykernels, kernels
from artifact.realize1d import realize, tent
from artifact.constructors import base_finite

ck = pytest.importorskip("artifact._ckernels")


@pytest.fixture(scope="module")
def maps():
    return [tent(3), tent(7), realize(base_finite(1, 1)[0], M=3, D=1).F]


def test_backend_is_compiled_when_built():
    assert kernels.BACKEND == "cython"


def test_env_forces_python():
    code = "from artifact import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, ARTIFACT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"


def test_apply_parity(maps):
    xs = np.linspace(-1, 1, 20001)
    for F in maps:
        arr = F.arrays()
        assert np.array_equal(ck.apply_flat(*arr, xs), _pykernels.apply_flat(*arr, xs))


def test_iterate_and_count_parity(maps):
    xs = np.linspace(0.3, 0.3 + 4e-6, 1500)
    for F in maps:
        arr = F.arrays()
        a = ck.iterate_flat(*arr, xs, 11)
        b = _pykernels.iterate_flat(*arr, xs, 11)
        assert a.shape == (1500, 12)
        assert np.allclose(a, b, rtol=0, atol=1e-12)
        for k in (6, 9, 12):
            assert ck.separated_count(a, 1e-3, k) == _pykernels.separated_count(a, 1e-3, k)


def test_separated_count_small():
    orbits = np.array([[0.0, 0.0], [0.0005, 0.0], [0.002, 0.0], [0.0, 0.01]])
    for mod in (ck, _pykernels):
        assert mod.separated_count(orbits, 1e-3, 1) == 2
        assert mod.separated_count(orbits, 1e-3, 2) == 3
