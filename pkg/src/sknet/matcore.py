"""Dense complex linear algebra at small dimension.

Matrices are plain ``numpy.ndarray`` of dtype complex128 and shape (d, d).
The predicates below decide unitarity, Hermiticity and membership in SU(d)
at an explicit tolerance; nothing is assumed about inputs.

Exponential and logarithm are truncated power series with explicit
remainder bounds rather than eigendecompositions: every caller works near
the identity, where the series are short and certified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, InvalidInput, OutOfBranch


@dataclass(frozen=True)
class Tolerances:
    norm_rel: float = 1e-10
    unitary_tol: float = 1e-9
    series_tol: float = 1e-14

    def __post_init__(self):
        if min(self.norm_rel, self.unitary_tol, self.series_tol) <= 0:
            raise InvalidInput("tolerances must be strictly positive")
        if not self.series_tol < self.unitary_tol < 1:
            raise InvalidInput("need series_tol < unitary_tol < 1")


TOL = Tolerances()

# bound on |H| accepted by mexp; keeps the Taylor remainder certifiable
MEXP_MAX_NORM = 4.0


def as_matrix(m) -> np.ndarray:
    """Coerce to a square complex128 array, rejecting non-finite entries."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidInput(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix has non-finite entries")
    return a


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimension mismatch: {a.shape} vs {b.shape}")


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def op_norm(m) -> float:
    """Largest singular value of ``m``."""
    return _kernels.opnorm(as_matrix(m))


def dist(u, v) -> float:
    """Operator-norm distance ``||u - v||``."""
    a, b = as_matrix(u), as_matrix(v)
    _same_dim(a, b)
    return _kernels.opnorm(a - b)


def is_unitary(m, tol: float = TOL.unitary_tol) -> bool:
    a = as_matrix(m)
    return op_norm(dagger(a) @ a - np.eye(len(a))) <= tol


def is_hermitian(m, tol: float = TOL.unitary_tol) -> bool:
    a = as_matrix(m)
    return op_norm(a - dagger(a)) <= tol


def is_special(m, tol: float = TOL.unitary_tol) -> bool:
    return abs(np.linalg.det(as_matrix(m)) - 1.0) <= tol


def is_diagonal(m, tol: float = 0.0) -> bool:
    a = as_matrix(m)
    return bool(np.all(np.abs(a - np.diag(np.diag(a))) <= tol))


def su_phase(m) -> complex:
    """Principal d-th root of ``det(m)^-1``; multiplying by it lands in SU(d)."""
    a = as_matrix(m)
    det = np.linalg.det(a)
    if abs(det) == 0:
        raise InvalidInput("singular matrix cannot be normalized")
    if abs(det - 1.0) <= 1e-14:
        return 1.0 + 0j
    theta = float(np.angle(1.0 / det))
    # keep the branch cut on the closed side: det = -1 must give theta = +pi
    # even when round-off leaves a tiny negative imaginary part
    if theta <= -math.pi + 1e-12:
        theta = math.pi
    return complex(np.exp(1j * theta / len(a)))


def to_special(m) -> tuple[np.ndarray, complex]:
    """Return ``(c * m, c)`` with ``c`` from :func:`su_phase`."""
    c = su_phase(m)
    return c * as_matrix(m), c


def mexp(h, scale: complex = 1j, tol: Tolerances = TOL) -> np.ndarray:
    """``exp(scale * h)`` for Hermitian ``h`` and ``scale`` in {+i, -i}.

    Taylor series, truncated once the tail bound
    ``x**(n+1) / (n+1)! / (1 - x/(n+2))`` with ``x = ||h||`` drops below
    ``tol.series_tol``.
    """
    a = as_matrix(h)
    if scale not in (1j, -1j):
        raise InvalidInput("scale must be +1j or -1j")
    if not is_hermitian(a, tol.unitary_tol):
        raise InvalidInput("mexp expects a Hermitian matrix")
    x = op_norm(a)
    if x > MEXP_MAX_NORM:
        raise InvalidInput(f"|H| = {x:.6g} exceeds {MEXP_MAX_NORM}")
    a = scale * a
    out = np.eye(len(a), dtype=np.complex128)
    term = out.copy()
    n = 0
    bound = 1.0
    while True:
        n += 1
        term = term @ a / n
        out = out + term
        # tail after term n: sum_{j>n} x^j / j!
        bound = bound * x / n if n > 1 else x
        tail = bound * x / (n + 1) / (1.0 - x / (n + 2)) if x < n + 2 else np.inf
        if tail <= tol.series_tol:
            return out


def mlog_principal(lam, tol: Tolerances = TOL) -> np.ndarray:
    """Hermitian ``H`` with ``lam = exp(iH)`` on the principal branch.

    Uses ``log(I + X) = sum (-1)^(k+1) X^k / k`` with ``X = lam - I``.
    ``dist(lam, I) < 1`` is required so the series converges; it also pins
    every eigenphase to ``|theta| < pi/3``.  The trace of ``H`` must come out
    zero: for ``d >= 7`` a special unitary can sit inside the ball with
    eigenphases summing to ``2*pi``, and that case is rejected rather than
    silently shifted by a phase.
    """
    a = as_matrix(lam)
    if not is_unitary(a, tol.unitary_tol):
        raise InvalidInput("mlog_principal expects a unitary")
    if not is_special(a, tol.unitary_tol):
        raise InvalidInput("mlog_principal expects det = 1")
    d = len(a)
    x_mat = a - np.eye(d)
    x = op_norm(x_mat)
    if x >= 1.0:
        raise OutOfBranch(f"dist(Lambda, I) = {x:.6g} >= 1")
    out = np.zeros((d, d), dtype=np.complex128)
    if x == 0.0:
        return out
    power = np.eye(d, dtype=np.complex128)
    k = 0
    while True:
        k += 1
        power = power @ x_mat
        out += power * ((-1) ** (k + 1) / k)
        # alternating-free tail bound: sum_{j>k} x^j / j <= x^(k+1) / ((k+1)(1-x))
        if x ** (k + 1) / ((k + 1) * (1.0 - x)) <= tol.series_tol:
            break
    h = -1j * out
    h = 0.5 * (h + dagger(h))
    tr = np.trace(h).real
    if abs(tr) > tol.unitary_tol:
        raise OutOfBranch(f"principal Hamiltonian has trace {tr:.6g}; not traceless")
    return h


def group_comm(a, b) -> np.ndarray:
    """Group commutator ``A B A^-1 B^-1`` (inverse taken as adjoint)."""
    x, y = as_matrix(a), as_matrix(b)
    _same_dim(x, y)
    return x @ y @ dagger(x) @ dagger(y)


def mat_comm(a, b) -> np.ndarray:
    """Matrix commutator ``AB - BA``."""
    x, y = as_matrix(a), as_matrix(b)
    _same_dim(x, y)
    return x @ y - y @ x


# ---------------------------------------------------------------------------
# randomness
# ---------------------------------------------------------------------------


def rng(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based Philox stream for ``(seed, *keys)``.

    Distinct key tuples give independent streams, so sampling code never
    shares generator state.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


def _as_gen(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else rng(seed)


def haar_sample(d: int, seed) -> np.ndarray:
    """Haar-random element of SU(d).

    Ginibre matrix, QR, phases of R's diagonal folded into Q (which makes
    the U(d) law exactly Haar), then a global phase into SU(d).
    """
    if d < 2:
        raise InvalidInput("d must be >= 2")
    g = _as_gen(seed)
    z = (g.standard_normal((d, d)) + 1j * g.standard_normal((d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    u = q * ph[None, :]
    return to_special(u)[0]


def random_hermitian(d: int, seed, traceless: bool = True) -> np.ndarray:
    """GUE-like Hermitian matrix of unit operator norm."""
    g = _as_gen(seed)
    z = g.standard_normal((d, d)) + 1j * g.standard_normal((d, d))
    h = 0.5 * (z + dagger(z))
    if traceless:
        h -= np.trace(h) / d * np.eye(d)
    return h / op_norm(h)


def sample_at_distance(d: int, target_dist: float, seed, max_steps: int = 50) -> np.ndarray:
    """``exp(i s H)`` with ``dist(., I)`` in ``[0.99, 1] * target_dist``.

    Accepts ``0 <= target_dist <= 2``.  ``H`` is a random traceless
    direction of unit norm; for ``s <= pi`` the distance ``2 sin(s/2)`` is
    monotone in ``s`` so bisection on the measured distance is sound.
    """
    if not 0.0 <= target_dist <= 2.0:
        raise InvalidInput("target_dist must lie in [0, 2]")
    eye = np.eye(d, dtype=np.complex128)
    if target_dist == 0.0:
        return eye
    h = random_hermitian(d, seed)
    lo_ok, hi_ok = 0.99 * target_dist, target_dist
    lo, hi = 0.0, math.pi
    u = eye
    for _ in range(max_steps):
        s = 0.5 * (lo + hi)
        u = mexp(s * h)
        r = dist(u, eye)
        if r > hi_ok:
            hi = s
        elif r < lo_ok:
            lo = s
        else:
            return u
    return u


def near_identity_sample(d: int, target_dist: float, seed) -> np.ndarray:
    """Random element of SU(d) at distance ~``target_dist`` from I (< 1)."""
    if not 0.0 < target_dist < 1.0:
        raise InvalidInput("target_dist must lie in (0, 1)")
    return sample_at_distance(d, target_dist, seed)


# ---------------------------------------------------------------------------
# JSON encoding
# ---------------------------------------------------------------------------


def matrix_to_json(m) -> dict:
    a = as_matrix(m)
    return {"dim": len(a), "entries": [[float(z.real), float(z.imag)] for z in a.ravel()]}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        d = int(obj["dim"])
        flat = np.array([complex(re, im) for re, im in obj["entries"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed matrix JSON: {exc}") from exc
    if flat.size != d * d:
        raise InvalidInput(f"matrix JSON has {flat.size} entries for dim {d}")
    return as_matrix(flat.reshape(d, d))
