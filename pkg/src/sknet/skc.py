"""Group-commutator recursion without diagonalization.

A near-identity special unitary ``Lambda = exp(iH)`` is split as
``H = H_o + H_d`` (off-diagonal and diagonal parts).  An off-diagonal
traceless Hermitian ``X`` is written as an exact matrix commutator
``[F, G] = iX`` with ``G`` a fixed diagonal ramp and ``F_jk = iX_jk /
(G_kk - G_jj)``; the diagonal part is first conjugated by the unitary DFT
matrix, which makes its diagonal vanish.  Exponentiating the generators
gives ``Lambda ~ [E1, E2][F1, F2]`` with all four factors at distance
``O(sqrt(eps))`` from the identity, and the recursion approximates those
factors one level down.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from . import matcore as mc
from .errors import CertificateViolation, InvalidInput, OutOfBranch
from .gates import GateSet, PlaceholderGateSet, Word, identity_word, word_inverse, word_join
from .matcore import TOL, Tolerances
from .nets import ShellNet, zoom_synthesize

COMMUTATOR_TOL = 1e-10
CERT_SLACK = 1e-14


@dataclass(frozen=True)
class SKConstants:
    d: int

    def __post_init__(self):
        if self.d < 2:
            raise InvalidInput("d must be >= 2")

    @property
    def pairs(self) -> float:
        return self.d * (self.d - 1) / 2

    @property
    def offdiag_factor(self) -> float:
        """``d^(1/4) ((d-1)/2)^(1/2)``: generator norm per ``sqrt(||H||)``."""
        return self.d**0.25 * math.sqrt((self.d - 1) / 2)

    @property
    def c_gc1(self) -> float:
        return 8 * self.pairs**1.5

    @property
    def c_gc2(self) -> float:
        return math.sqrt(self.d) * math.sqrt((self.d - 1) / 2)

    @property
    def c_approx(self) -> float:
        return 16 * math.sqrt(self.pairs) + self.d + 8 * self.pairs**1.5

    @property
    def eps0_max(self) -> float:
        return 1 / self.c_approx**2


@dataclass(frozen=True)
class CommutatorPair:
    F: np.ndarray
    G: np.ndarray
    norm_bound: float


def decompose_offdiag(h, tol: Tolerances = TOL) -> CommutatorPair:
    """Hermitian ``F, G`` with ``[F, G] = iH`` for zero-diagonal Hermitian ``H``.

    ``G = diag(-(d-1)/2, ..., (d-1)/2)`` and ``F_jk = iH_jk / (G_kk - G_jj)``,
    then both are rescaled to the common norm ``sqrt(|F| |G|)``.
    """
    h = mc.as_matrix(h)
    d = len(h)
    if not mc.is_hermitian(h, tol.unitary_tol):
        raise InvalidInput("decompose_offdiag expects a Hermitian matrix")
    if np.max(np.abs(np.diag(h))) > tol.unitary_tol:
        raise InvalidInput("decompose_offdiag expects a zero diagonal")
    g_diag = -(d - 1) / 2 + np.arange(d, dtype=np.float64)
    gap = g_diag[None, :] - g_diag[:, None]
    np.fill_diagonal(gap, 1.0)
    f = 1j * h / gap
    np.fill_diagonal(f, 0.0)
    g = np.diag(g_diag).astype(np.complex128)
    bound = SKConstants(d).offdiag_factor * math.sqrt(mc.op_norm(h))
    nf = mc.op_norm(f)
    if nf == 0.0:
        z = np.zeros_like(h)
        return CommutatorPair(z, z.copy(), 0.0)
    alpha = math.sqrt(mc.op_norm(g) / nf)
    f, g = alpha * f, g / alpha
    err = mc.op_norm(mc.mat_comm(f, g) - 1j * h)
    if err > COMMUTATOR_TOL:
        raise CertificateViolation(f"[F, G] misses iH by {err:.3e}")
    return CommutatorPair(f, g, bound)


def dft_matrix(d: int) -> np.ndarray:
    j = np.arange(d)
    return np.exp(2j * np.pi * np.outer(j, j) / d) / math.sqrt(d)


def offdiagonalize(dmat, tol: Tolerances = TOL) -> tuple[np.ndarray, np.ndarray]:
    """Conjugate a traceless real diagonal by the DFT: returns ``(Phi D Phi^H, Phi)``.

    Every diagonal entry of the result equals ``tr(D) / d``, i.e. zero.
    """
    dm = mc.as_matrix(dmat)
    if not mc.is_diagonal(dm):
        raise InvalidInput("offdiagonalize expects a diagonal matrix")
    if np.max(np.abs(np.diag(dm).imag)) > tol.unitary_tol:
        raise InvalidInput("offdiagonalize expects a real (Hermitian) diagonal")
    if abs(np.trace(dm)) > tol.unitary_tol:
        raise InvalidInput("offdiagonalize expects a traceless diagonal")
    phi = dft_matrix(len(dm))
    m = phi @ dm @ mc.dagger(phi)
    m = 0.5 * (m + mc.dagger(m))
    return m, phi


@dataclass
class LambdaCertificate:
    eps: float
    norm_h: float
    norm_h_offdiag: float
    norm_h_diag: float
    measured: float
    bound: float
    factor_dists: tuple[float, float, float, float]
    factor_bound: float

    @property
    def ok(self) -> bool:
        return (
            self.measured <= self.bound + CERT_SLACK
            and max(self.factor_dists) <= self.factor_bound + CERT_SLACK
        )


def decompose_lambda(
    lam, consts: SKConstants | None = None, strict: bool = True, tol: Tolerances = TOL
) -> tuple[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray], LambdaCertificate]:
    """``Lambda ~ [E1, E2][F1, F2]`` with a measured certificate.

    The certificate checks ``dist([E1,E2][F1,F2], Lambda) <= c_gc1 eps^1.5``
    and ``dist(X, I) <= c_gc2 sqrt(eps)`` for each factor.  With ``strict``
    a failed certificate raises :class:`CertificateViolation`.
    """
    lam = mc.as_matrix(lam)
    d = len(lam)
    consts = consts or SKConstants(d)
    if consts.d != d:
        raise InvalidInput(f"constants for d={consts.d}, Lambda has d={d}")
    eye = np.eye(d, dtype=np.complex128)
    eps = mc.dist(lam, eye)
    if eps >= 1.0:
        raise OutOfBranch(f"dist(Lambda, I) = {eps:.6g} >= 1")
    h = mc.mlog_principal(lam, tol)
    norm_h = mc.op_norm(h)
    h_d = np.diag(np.diag(h))
    h_o = h - h_d
    n_o, n_d = mc.op_norm(h_o), mc.op_norm(h_d)
    if n_d > norm_h + 1e-12 or n_o > 2 * norm_h + 1e-12:
        raise CertificateViolation(f"split norms |H_o|={n_o:.3e}, |H_d|={n_d:.3e} exceed |H|={norm_h:.3e} envelopes")

    pe = decompose_offdiag(h_o, tol)
    m, phi = offdiagonalize(h_d, tol)
    pf = decompose_offdiag(m, tol)
    phi_h = mc.dagger(phi)
    # [i e1, i e2] = -[G, F] = [F, G] = i H_o, likewise for the diagonal part
    e1, e2 = pe.G, pe.F
    f1, f2 = phi_h @ pf.G @ phi, phi_h @ pf.F @ phi
    f1 = 0.5 * (f1 + mc.dagger(f1))
    f2 = 0.5 * (f2 + mc.dagger(f2))
    factors = tuple(mc.mexp(x, 1j, tol) for x in (e1, e2, f1, f2))
    approx = mc.group_comm(factors[0], factors[1]) @ mc.group_comm(factors[2], factors[3])
    cert = LambdaCertificate(
        eps=eps,
        norm_h=norm_h,
        norm_h_offdiag=n_o,
        norm_h_diag=n_d,
        measured=mc.dist(approx, lam),
        bound=consts.c_gc1 * eps**1.5,
        factor_dists=tuple(mc.dist(x, eye) for x in factors),
        factor_bound=consts.c_gc2 * math.sqrt(eps),
    )
    if strict and not cert.ok:
        raise CertificateViolation(f"decompose_lambda certificate failed: {cert}")
    return factors, cert


# ---------------------------------------------------------------------------
# base approximators
# ---------------------------------------------------------------------------


class BaseApproximator(Protocol):
    gateset: GateSet
    epsilon0: float

    def query(self, u: np.ndarray) -> tuple[Word, np.ndarray, float]: ...


class NetBackend:
    """Level-0 approximations by zooming through a :class:`ShellNet`."""

    def __init__(self, net: ShellNet):
        self.net = net
        self.gateset = net.gateset
        self.epsilon0 = net.params.delta(net.params.k)

    def query(self, u):
        word, achieved = zoom_synthesize(u, self.net)
        return word, word.value, achieved


class MockBackend:
    """Returns ``U exp(iH)`` at distance ~``epsilon0`` from ``U``.

    Each answer is registered as a fresh letter of a placeholder alphabet,
    so assembled words stay evaluable.  Perturbation directions come from
    independent Philox streams keyed by query number.
    """

    def __init__(self, d: int, epsilon0: float, seed: int = 0):
        if not 0 <= epsilon0 < 1:
            raise InvalidInput("epsilon0 must lie in [0, 1)")
        self.gateset = PlaceholderGateSet(d, name=f"mock-eps{epsilon0:g}")
        self.epsilon0 = epsilon0
        self.seed = seed
        self.queries = 0

    def query(self, u):
        u = mc.as_matrix(u)
        if self.epsilon0 == 0:
            m = u.copy()
        else:
            kick = mc.sample_at_distance(len(u), self.epsilon0, mc.rng(self.seed, self.queries))
            m = u @ kick
        self.queries += 1
        idx = self.gateset.register(m)
        return Word(self.gateset, (idx,), m), m, mc.dist(m, u)


# ---------------------------------------------------------------------------
# recursion
# ---------------------------------------------------------------------------


@dataclass
class LedgerEntry:
    level: int
    predicted: float
    measured: float


@dataclass
class SynthesisResult:
    word: Word
    achieved: float
    levels: int
    ledger: list[LedgerEntry]
    length: int
    seconds: float = 0.0
    level_lengths: list[int] = field(default_factory=list)
    certificate_failures: int = 0
    certificates: list[LambdaCertificate] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "word": list(self.word.indices),
            "achieved": self.achieved,
            "levels": self.levels,
            "ledger": [{"predicted": e.predicted, "measured": e.measured} for e in self.ledger],
            "length": self.length,
        }


def _comm_word(a: Word, b: Word) -> Word:
    return word_join(a, b, word_inverse(a), word_inverse(b))


class _Recursion:
    def __init__(self, base: BaseApproximator, consts: SKConstants, strict: bool, tol: Tolerances):
        self.base = base
        self.consts = consts
        self.strict = strict
        self.tol = tol
        self.certificates: list[LambdaCertificate] = []
        self.eye = np.eye(consts.d, dtype=np.complex128)

    def approx(self, u: np.ndarray, n: int) -> Word:
        if n == 0:
            word, _, _ = self.base.query(u)
            return word
        return self.step(u, self.approx(u, n - 1), n)

    def step(self, u: np.ndarray, prev: Word, n: int) -> Word:
        lam = u @ mc.dagger(prev.value)
        eps = mc.dist(lam, self.eye)
        if eps <= self.tol.series_tol:
            return prev
        if eps >= 1.0:
            raise OutOfBranch(f"level {n}: residual dist(Lambda, I) = {eps:.6g} >= 1")
        factors, cert = decompose_lambda(lam, self.consts, strict=self.strict, tol=self.tol)
        self.certificates.append(cert)
        e1, e2, f1, f2 = (self.approx(x, n - 1) for x in factors)
        return word_join(_comm_word(e1, e2), _comm_word(f1, f2), prev)


def sk_recurse(
    u,
    n: int,
    base: BaseApproximator,
    consts: SKConstants | None = None,
    tol: Tolerances = TOL,
) -> SynthesisResult:
    """``n`` levels of commutator refinement on top of ``base``.

    Level ``i`` forms ``Lambda = U U_{i-1}^-1``, splits it into two group
    commutators and approximates the four factors at level ``i-1``; the
    result is ``[E1', E2'][F1', F2'] U_{i-1}``.  The ledger pairs the
    predicted error ``c_approx eps_{i-1}^1.5`` with the measured one.  If
    the base resolution exceeds ``eps0_max`` the per-level certificates
    are recorded but not enforced.
    """
    if n < 0:
        raise InvalidInput("levels must be >= 0")
    u = mc.as_matrix(u)
    d = len(u)
    consts = consts or SKConstants(d)
    if consts.d != d:
        raise InvalidInput(f"constants for d={consts.d}, target has d={d}")
    if base.gateset.dim != d:
        raise InvalidInput(f"backend has dim {base.gateset.dim}, target has d={d}")
    if not mc.is_unitary(u, tol.unitary_tol) or not mc.is_special(u, tol.unitary_tol):
        raise InvalidInput("target must be in SU(d)")
    strict = base.epsilon0 <= consts.eps0_max
    rec = _Recursion(base, consts, strict, tol)
    t0 = time.perf_counter()
    if mc.dist(u, rec.eye) <= tol.series_tol:
        # the empty word is already exact; nothing to refine
        current = identity_word(base.gateset)
    else:
        current = rec.approx(u, 0)
    predicted = base.epsilon0
    ledger = [LedgerEntry(0, predicted, mc.dist(current.value, u))]
    lengths = [current.length]
    for level in range(1, n + 1):
        current = rec.step(u, current, level)
        predicted = consts.c_approx * predicted**1.5
        ledger.append(LedgerEntry(level, predicted, mc.dist(current.value, u)))
        lengths.append(current.length)
    seconds = time.perf_counter() - t0
    return SynthesisResult(
        word=current,
        achieved=mc.dist(current.value, u),
        levels=n,
        ledger=ledger,
        length=current.length,
        seconds=seconds,
        level_lengths=lengths,
        certificate_failures=sum(not c.ok for c in rec.certificates),
        certificates=rec.certificates,
    )


def iterations_needed(epsilon: float, epsilon0: float) -> int:
    """Smallest integer ``n > ln(ln eps / ln eps0) / ln(3/2)``."""
    if not 0 < epsilon < epsilon0 < 1:
        raise InvalidInput("need 0 < epsilon < epsilon0 < 1")
    x = math.log(math.log(epsilon) / math.log(epsilon0)) / math.log(1.5)
    nearest = round(x)
    if abs(x - nearest) < 1e-9:
        x = float(nearest)
    return math.floor(x) + 1
