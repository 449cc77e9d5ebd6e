import os
import subprocess
import sys

import numpy as np
import pytest

from sknet import _kernels as K
from sknet import matcore as mc

needs_numba = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not installed")


def stack_of(n, d, seed):
    g = mc.rng(seed, d)
    return np.ascontiguousarray(np.array([mc.haar_sample(d, g) for _ in range(n)]))


@pytest.mark.parametrize("d", [2, 3, 4, 8, 16])
def test_numpy_matches_svd(d):
    s = stack_of(50, d, 1) - np.eye(d)
    ref = np.linalg.svd(s, compute_uv=False)[:, 0]
    assert np.max(np.abs(K.opnorm_stack_numpy(s) - ref) / ref) <= 1e-10


@needs_numba
@pytest.mark.parametrize("d", [2, 3, 4, 8, 16])
def test_backends_agree(d):
    s = stack_of(200, d, 2)
    t = mc.haar_sample(d, 3)
    a, b = K.dists_numpy(s, t), K.dists_numba(s, t)
    assert np.max(np.abs(a - b) / a) <= 1e-10
    assert K.nearest_numpy(s, t)[0] == K.nearest_numba(s, t)[0]
    assert K.opnorm_numba(s[0]) == pytest.approx(K.opnorm_numpy(s[0]), rel=1e-10)


@needs_numba
def test_numba_matches_svd():
    s = stack_of(100, 5, 4)
    ref = np.linalg.svd(s, compute_uv=False)[:, 0]
    assert np.max(np.abs(K.opnorm_stack_numba(s) - ref)) <= 1e-12


@pytest.mark.parametrize("nearest", [K.nearest_numpy] + ([K.nearest_numba] if K.HAVE_NUMBA else []))
def test_nearest_ties_and_empty(nearest):
    u = mc.haar_sample(2, 0)
    s = np.ascontiguousarray(np.stack([u, -u, u]))
    assert nearest(s, u) == (0, 0.0)
    i, d = nearest(np.empty((0, 2, 2), dtype=complex), u)
    assert i == -1 and d == np.inf


def test_zero_matrix():
    assert K.opnorm(np.zeros((3, 3), dtype=complex)) == 0.0


def test_dispatch_contiguity():
    s = stack_of(10, 2, 5)[::2]
    assert not s.flags.c_contiguous
    assert np.allclose(K.opnorm_stack(s), K.opnorm_stack_numpy(np.ascontiguousarray(s)))


def _backend_in_subprocess(flag):
    env = dict(os.environ)
    env.pop("SKNET_PURE_NUMPY", None)
    if flag is not None:
        env["SKNET_PURE_NUMPY"] = flag
    out = subprocess.run(
        [sys.executable, "-c", "import sknet; print(sknet.backend_name())"],
        env=env, capture_output=True, text=True, check=True,
    )
    return out.stdout.strip()


def test_env_flag_selects_numpy():
    assert _backend_in_subprocess("1") == "numpy"


@needs_numba
def test_default_is_numba():
    assert _backend_in_subprocess(None) == "numba"
