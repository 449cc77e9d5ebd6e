"""Operator-norm kernels.

Every distance in the package is a spectral norm of a small dense complex
matrix, and the net builders evaluate millions of them.  The kernels here
come in two flavours with identical semantics:

* numba ``@njit`` loops (default when numba imports), and
* a vectorised pure-numpy path over stacks of matrices.

Set ``SKNET_PURE_NUMPY=1`` in the environment before import to force the
numpy path.  Both implementations are always importable under explicit
names (``*_numba`` / ``*_numpy``) so they can be compared side by side.

The norm itself is the square root of the dominant eigenvalue of ``M^H M``,
found by power iteration with repeated squaring: ``B <- B @ B / tr(B @ B)``
drives ``B`` to the projector onto the dominant eigenspace, after which a
column of ``B`` is a dominant right singular vector and ``|Mx| / |x|`` is the
Rayleigh-quotient estimate.  The squaring makes the effective power ``2**p``
so even near-degenerate spectra converge in a few dozen steps.
"""

from __future__ import annotations

import os

import numpy as np

MAX_SQUARINGS = 64
CONVERGED = 1e-15

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("SKNET_PURE_NUMPY", "") not in ("1", "true", "yes")


# ---------------------------------------------------------------------------
# numpy reference path
# ---------------------------------------------------------------------------


def opnorm_stack_numpy(stack: np.ndarray) -> np.ndarray:
    """Spectral norms of a ``(n, d, d)`` stack."""
    stack = np.asarray(stack, dtype=np.complex128)
    n, d, _ = stack.shape
    out = np.zeros(n)
    if n == 0:
        return out
    gram = np.conj(np.swapaxes(stack, 1, 2)) @ stack
    tr = np.real(np.trace(gram, axis1=1, axis2=2))
    live = tr > 0.0
    if not live.any():
        return out
    m = stack[live]
    gram = gram[live]
    b = gram / tr[live][:, None, None]
    for _ in range(MAX_SQUARINGS):
        c = b @ b
        c /= np.real(np.trace(c, axis1=1, axis2=2))[:, None, None]
        diff = np.max(np.abs(c - b))
        b = c
        if diff < CONVERGED:
            break
    diag = np.real(np.diagonal(b, axis1=1, axis2=2))
    col = np.argmax(diag, axis=1)
    x = b[np.arange(len(b)), :, col]
    mx = np.einsum("nij,nj->ni", m, x)
    out[live] = np.linalg.norm(mx, axis=1) / np.linalg.norm(x, axis=1)
    return out


def opnorm_numpy(m: np.ndarray) -> float:
    return float(opnorm_stack_numpy(np.asarray(m)[None])[0])


def dists_numpy(stack: np.ndarray, target: np.ndarray) -> np.ndarray:
    """``||stack[j] - target||`` for every j."""
    return opnorm_stack_numpy(np.asarray(stack) - np.asarray(target)[None])


def nearest_numpy(stack: np.ndarray, target: np.ndarray) -> tuple[int, float]:
    """Index and distance of the element of ``stack`` closest to ``target``.

    Frobenius bounds ``|M|_F / sqrt(d) <= |M| <= |M|_F`` prune the exact
    evaluations.  Ties resolve to the lowest index.  Empty stack -> (-1, inf).
    """
    n = len(stack)
    if n == 0:
        return -1, np.inf
    diff = np.asarray(stack) - np.asarray(target)[None]
    d = diff.shape[1]
    fro = np.sqrt(np.sum(np.abs(diff) ** 2, axis=(1, 2)))
    upper = fro.min()
    cand = np.flatnonzero(fro / np.sqrt(d) <= upper)
    exact = opnorm_stack_numpy(diff[cand])
    j = int(np.argmin(exact))
    return int(cand[j]), float(exact[j])


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _opnorm_diff_nb(a, t):
        # spectral norm of a - t, a and t (d, d) complex
        d = a.shape[0]
        m = np.empty((d, d), dtype=np.complex128)
        for i in range(d):
            for j in range(d):
                m[i, j] = a[i, j] - t[i, j]
        g = np.zeros((d, d), dtype=np.complex128)
        for i in range(d):
            for j in range(d):
                s = 0j
                for r in range(d):
                    s += np.conj(m[r, i]) * m[r, j]
                g[i, j] = s
        tr = 0.0
        for i in range(d):
            tr += g[i, i].real
        if tr <= 0.0:
            return 0.0
        b = np.empty((d, d), dtype=np.complex128)
        for i in range(d):
            for j in range(d):
                b[i, j] = g[i, j] / tr
        c = np.empty((d, d), dtype=np.complex128)
        for _ in range(MAX_SQUARINGS):
            ct = 0.0
            for i in range(d):
                for j in range(d):
                    s = 0j
                    for r in range(d):
                        s += b[i, r] * b[r, j]
                    c[i, j] = s
                ct += c[i, i].real
            diff = 0.0
            for i in range(d):
                for j in range(d):
                    v = c[i, j] / ct
                    e = abs(v - b[i, j])
                    if e > diff:
                        diff = e
                    b[i, j] = v
            if diff < CONVERGED:
                break
        col = 0
        best = b[0, 0].real
        for i in range(1, d):
            if b[i, i].real > best:
                best = b[i, i].real
                col = i
        nx = 0.0
        nmx = 0.0
        for i in range(d):
            nx += abs(b[i, col]) ** 2
            s = 0j
            for j in range(d):
                s += m[i, j] * b[j, col]
            nmx += abs(s) ** 2
        return np.sqrt(nmx / nx)

    @numba.njit(cache=True)
    def dists_numba(stack, target):
        n = stack.shape[0]
        out = np.empty(n)
        for k in range(n):
            out[k] = _opnorm_diff_nb(stack[k], target)
        return out

    @numba.njit(cache=True)
    def opnorm_stack_numba(stack):
        n, d, _ = stack.shape
        zero = np.zeros((d, d), dtype=np.complex128)
        out = np.empty(n)
        for k in range(n):
            out[k] = _opnorm_diff_nb(stack[k], zero)
        return out

    @numba.njit(cache=True)
    def nearest_numba(stack, target):
        n = stack.shape[0]
        if n == 0:
            return -1, np.inf
        d = stack.shape[1]
        sqd = np.sqrt(d)
        best = np.inf
        arg = -1
        for k in range(n):
            fro = 0.0
            for i in range(d):
                for j in range(d):
                    fro += abs(stack[k, i, j] - target[i, j]) ** 2
            fro = np.sqrt(fro)
            if fro / sqd > best:
                continue
            v = _opnorm_diff_nb(stack[k], target)
            if v < best:
                best = v
                arg = k
        return arg, best

    def opnorm_numba(m: np.ndarray) -> float:
        m = np.ascontiguousarray(m, dtype=np.complex128)
        return float(_opnorm_diff_nb(m, np.zeros_like(m)))


def _c128(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.complex128)


if USE_NUMBA:

    def opnorm(m: np.ndarray) -> float:
        return opnorm_numba(m)

    def opnorm_stack(stack: np.ndarray) -> np.ndarray:
        return opnorm_stack_numba(_c128(stack))

    def dists(stack: np.ndarray, target: np.ndarray) -> np.ndarray:
        return dists_numba(_c128(stack), _c128(target))

    def nearest(stack: np.ndarray, target: np.ndarray) -> tuple[int, float]:
        j, v = nearest_numba(_c128(stack), _c128(target))
        return int(j), float(v)

else:
    opnorm = opnorm_numpy
    opnorm_stack = opnorm_stack_numpy
    dists = dists_numpy
    nearest = nearest_numpy


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
