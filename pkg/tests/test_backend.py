import os
import subprocess
import sys

import numpy as np
import pytest

from kmtheta import _backend, _fpkernel_py

cython = pytest.importorskip("kmtheta._fpkernel")


def _sets(a):
    return {tuple(v) for v in np.asarray(a).tolist()}


def test_compiled_kernel_is_default():
    if os.environ.get("KMTHETA_BACKEND", "").lower() != "python":
        assert _backend.BACKEND == "cython"


def test_enumerate_agrees(rng):
    for _ in range(10):
        k = int(rng.integers(2, 7))
        A = rng.normal(size=(k, k))
        M = A @ A.T + 0.5 * np.eye(k)
        R = np.ascontiguousarray(np.linalg.cholesky(M).T)
        c = np.ascontiguousarray(rng.uniform(-0.5, 0.5, k))
        a = cython.enumerate_ball(R, 5.0, c, -1)
        b = _fpkernel_py.enumerate_ball(R, 5.0, c, -1)
        assert len(a) == len(b) and _sets(a) == _sets(b)


def test_histogram_agrees():
    from kmtheta.lattice import e8_lattice, total_majorant
    L = e8_lattice()
    A, _, den = L.exact_gram_parts()
    R = np.ascontiguousarray(np.linalg.cholesky(total_majorant(L)).T)
    G = np.ascontiguousarray(A, dtype=np.int64)
    bound = 4.0 * (1 + 1e-9)  # callers pad the bound so lattice points on the sphere are kept
    a = cython.histogram_ball(R, bound, G)
    assert a == _fpkernel_py.histogram_ball(R, bound, G)
    assert [a[2 * m] for m in range(5)] == [1, 240, 2160, 6720, 17520]


def test_limit_in_both():
    R = np.eye(3)
    for kern in (cython, _fpkernel_py):
        with pytest.raises(OverflowError):
            kern.enumerate_ball(R, 50.0, np.zeros(3), 5)


def test_environment_forces_fallback():
    env = dict(os.environ, KMTHETA_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "from kmtheta import _backend; print(_backend.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
