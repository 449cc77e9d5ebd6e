"""Shell-structured nets over a gate set.

A :class:`ShellNet` is a chain of shells ``Gamma_0 .. Gamma_k``.  Shell ``i``
has radius ``r_i = 2 / q**i`` and resolution ``delta_i = 2 / q**(i+1)``; its
non-identity elements satisfy ``delta_i <= dist(g, I) <= r_i`` and are
pairwise more than ``delta_i`` apart.  Every shell also holds the identity
(empty word), so a shell that covers its annulus covers the whole ball.

Builders:

* :func:`build_exhaustive` - breadth-first enumeration of all words up to a
  length, greedily sparsified into shells.
* :func:`build_heuristic` - grows the shells by multiplying generators onto
  existing elements and dividing out the nearest shell element whenever a
  candidate is already covered.
* :func:`build_complement` - one finer shell from ``U V W^-1`` products of a
  coarse one; the result is a candidate until audited.

Nearest-neighbour search is a linear scan through :mod:`sknet._kernels`.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from . import _kernels
from . import matcore as mc
from .errors import BudgetExceeded, InvalidInput, SynthesisGap
from .gates import GateSet, Word, identity_word, word_concat, word_inverse, word_value

log = logging.getLogger(__name__)

EXHAUSTIVE_BUDGET = 10**8
DUPLICATE_TOL = 1e-10
# grid used to hash matrices for duplicate detection; far coarser than
# product round-off, far finer than any distinct group elements we meet
_HASH_SCALE = 1e9
DIST_CHECK_TOL = 1e-9
_BFS_CHUNK = 65536
DIVISION_SLACK = 1e-12


@dataclass(frozen=True)
class NetParams:
    q: float
    epsilon: float
    L: int
    d: int

    def __post_init__(self):
        if not self.q > 1:
            raise InvalidInput(f"quality q must exceed 1, got {self.q}")
        if not 0 < self.epsilon < 1:
            raise InvalidInput(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not self.q < 1 / self.epsilon:
            raise InvalidInput(f"need q < 1/epsilon, got q={self.q}, epsilon={self.epsilon}")
        if self.L < 1:
            raise InvalidInput("L must be >= 1")
        if self.d < 2:
            raise InvalidInput("d must be >= 2")

    @property
    def k(self) -> int:
        """Index of the last shell, ``ceil((1 + ln(1/eps)) / ln q)``."""
        return math.ceil((1 + math.log(1 / self.epsilon)) / math.log(self.q))

    def radius(self, i: int) -> float:
        return 2.0 / self.q**i

    def delta(self, i: int) -> float:
        return 2.0 / self.q ** (i + 1)

    def to_json(self) -> dict:
        return {"q": self.q, "epsilon": self.epsilon, "L": self.L, "d": self.d, "k": self.k}

    @classmethod
    def from_json(cls, obj: dict) -> "NetParams":
        p = cls(float(obj["q"]), float(obj["epsilon"]), int(obj["L"]), int(obj["d"]))
        if "k" in obj and int(obj["k"]) != p.k:
            raise InvalidInput(f"stored k={obj['k']} disagrees with computed k={p.k}")
        return p


def shell_index(delta: float, params: NetParams, start: int = 0) -> int | None:
    """Shell whose window ``[2/q**(i+1), 2/q**i]`` contains ``delta``.

    Lower index wins on boundary ties.  Only indices ``>= start`` are
    considered.  Returns None above 2 or below the last window.
    """
    if delta < 0:
        raise InvalidInput("distance must be nonnegative")
    if delta > 2.0:
        return None
    for i in range(start, params.k + 1):
        if params.delta(i) <= delta <= params.radius(i):
            return i
        if delta > params.radius(i):
            return None
    return None


@dataclass
class NetElement:
    word: Word
    matrix: np.ndarray = field(repr=False)
    dist: float


class Shell:
    """Growable list of elements with a contiguous matrix stack for search."""

    def __init__(self, index: int, radius: float, delta: float, d: int, windowed: bool = True):
        self.index = index
        self.radius = radius
        self.delta = delta
        self.windowed = windowed
        self.elements: list[NetElement] = []
        self._buf = np.empty((8, d, d), dtype=np.complex128)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[NetElement]:
        return iter(self.elements)

    @property
    def stack(self) -> np.ndarray:
        return self._buf[: len(self.elements)]

    def add(self, elem: NetElement) -> None:
        n = len(self.elements)
        if n == len(self._buf):
            grown = np.empty((2 * n,) + self._buf.shape[1:], dtype=np.complex128)
            grown[:n] = self._buf
            self._buf = grown
        self._buf[n] = elem.matrix
        self.elements.append(elem)

    def nearest(self, target: np.ndarray) -> tuple[int, float]:
        return _kernels.nearest(self.stack, target)

    def non_identity(self) -> int:
        return sum(1 for e in self.elements if e.word.length > 0 or e.dist > 0)

    def max_word_length(self) -> int:
        return max((e.word.length for e in self.elements), default=0)


class ShellNet:
    def __init__(self, params: NetParams, gateset: GateSet, with_identity: bool = True):
        if gateset.dim != params.d:
            raise InvalidInput(f"gate set dim {gateset.dim} != net dim {params.d}")
        self.params = params
        self.gateset = gateset
        self.shells = [
            Shell(i, params.radius(i), params.delta(i), params.d) for i in range(params.k + 1)
        ]
        if with_identity:
            ident = identity_word(gateset)
            for s in self.shells:
                s.add(NetElement(ident, ident.value, 0.0))

    @property
    def gate_set_hash(self) -> str:
        return self.gateset.content_hash

    def cardinalities(self) -> list[int]:
        return [len(s) for s in self.shells]

    def size(self) -> int:
        return sum(len(s) for s in self.shells)

    def empty_shells(self) -> list[int]:
        """Shells with a window fully above epsilon but only the identity."""
        eps = self.params.epsilon
        return [s.index for s in self.shells if s.delta > eps and s.non_identity() == 0]

    def max_word_length(self) -> int:
        return max(s.max_word_length() for s in self.shells)

    def elements(self) -> Iterator[NetElement]:
        for s in self.shells:
            yield from s

    def try_insert(self, word: Word, matrix: np.ndarray, dist_to_i: float) -> int | None:
        """Route to the owning shell and insert if sparseness survives."""
        i = shell_index(dist_to_i, self.params)
        if i is None:
            return None
        shell = self.shells[i]
        _, dn = shell.nearest(matrix)
        if dn > shell.delta:
            shell.add(NetElement(word, matrix, dist_to_i))
            return i
        return None

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "gate_set_hash": self.gate_set_hash,
            "shells": [
                [{"word": list(e.word.indices), "dist": e.dist} for e in s] for s in self.shells
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":")) + "\n"

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def from_json(cls, obj: dict, gateset: GateSet) -> "ShellNet":
        try:
            params = NetParams.from_json(obj["params"])
            stored_hash = obj["gate_set_hash"]
            shells = obj["shells"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed net JSON: {exc}") from exc
        if stored_hash != gateset.content_hash:
            raise InvalidInput(f"net was built for gate set {stored_hash}, got {gateset.content_hash}")
        if len(shells) != params.k + 1:
            raise InvalidInput(f"net has {len(shells)} shells, expected {params.k + 1}")
        net = cls(params, gateset, with_identity=False)
        eye = np.eye(params.d)
        for s, entries in zip(net.shells, shells):
            for e in entries:
                w = Word(gateset, e["word"])
                m = word_value(w)
                r = mc.dist(m, eye)
                if abs(r - float(e["dist"])) > DIST_CHECK_TOL:
                    raise InvalidInput(f"shell {s.index}: stored dist {e['dist']} != recomputed {r}")
                s.add(NetElement(w, m, float(e["dist"])))
        return net

    @classmethod
    def load(cls, path: str | os.PathLike, gateset: GateSet) -> "ShellNet":
        with open(path) as fh:
            return cls.from_json(json.load(fh), gateset)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def _hash_key(m: np.ndarray) -> bytes:
    return np.rint(m.view(np.float64) * _HASH_SCALE).astype(np.int64).tobytes()


def build_exhaustive(
    gs: GateSet, params: NetParams, max_len: int, budget: int | None = None
) -> ShellNet:
    """All words up to ``max_len``, shortest first, greedily sparsified.

    Words whose values coincide (to the hashing grid) with an earlier word
    are pruned, so each group element is represented by a shortest word.
    Before each level the node count ``|frontier| * |G|`` is checked
    against ``budget`` (default :data:`EXHAUSTIVE_BUDGET`);
    :class:`BudgetExceeded` is raised instead of expanding past it.
    """
    if budget is None:
        budget = EXHAUSTIVE_BUDGET
    if max_len < 0:
        raise InvalidInput("max_len must be >= 0")
    net = ShellNet(params, gs)
    d = gs.dim
    eye = np.eye(d, dtype=np.complex128)
    seen = {_hash_key(eye)}
    frontier_words: list[tuple[int, ...]] = [()]
    frontier = eye[None].copy()
    mats = gs.matrices
    n_gates = len(gs)
    enumerated = 1
    for length in range(1, max_len + 1):
        estimate = enumerated + len(frontier_words) * n_gates
        if estimate > budget:
            raise BudgetExceeded(
                f"length {length} would enumerate ~{estimate} nodes, budget {budget}"
            )
        next_words: list[tuple[int, ...]] = []
        next_mats: list[np.ndarray] = []
        for lo in range(0, len(frontier_words), _BFS_CHUNK):
            block = frontier[lo : lo + _BFS_CHUNK]
            prods = np.ascontiguousarray((block[:, None] @ mats[None]).reshape(-1, d, d))
            keys = np.rint(prods.reshape(len(prods), -1).view(np.float64) * _HASH_SCALE).astype(np.int64)
            dists = _kernels.opnorm_stack(prods - eye)
            for idx in range(len(prods)):
                kb = keys[idx].tobytes()
                if kb in seen:
                    continue
                seen.add(kb)
                word = frontier_words[lo + idx // n_gates] + (idx % n_gates,)
                next_words.append(word)
                next_mats.append(prods[idx])
                if length <= params.L:
                    m = prods[idx].copy()
                    net.try_insert(Word(gs, word, m), m, float(dists[idx]))
        enumerated += len(next_words)
        frontier_words = next_words
        frontier = np.array(next_mats).reshape(-1, d, d)
        log.debug("exhaustive: length %d, %d new elements, net size %d", length, len(next_words), net.size())
    return net


@dataclass
class Insertion:
    sweep: int
    shell: int
    length: int
    dist: float


@dataclass
class BuildLog:
    insertions: list[Insertion] = field(default_factory=list)
    sweep_additions: list[int] = field(default_factory=list)
    sweep_candidates: list[int] = field(default_factory=list)
    division_checks: int = 0
    division_failures: int = 0
    discarded_small: int = 0
    discarded_long: int = 0
    terminated: bool = False

    def to_text(self) -> str:
        lines = ["# sweep shell length dist"]
        lines += [f"{r.sweep} {r.shell} {r.length} {r.dist!r}" for r in self.insertions]
        for s, (c, a) in enumerate(zip(self.sweep_candidates, self.sweep_additions)):
            lines.append(f"# sweep {s} candidates {c} additions {a}")
        lines.append(f"# division_checks {self.division_checks} division_failures {self.division_failures}")
        lines.append(f"# discarded_small {self.discarded_small} discarded_long {self.discarded_long}")
        lines.append(f"# terminated {str(self.terminated).lower()}")
        return "\n".join(lines) + "\n"


def _copy_net(seed: ShellNet, params: NetParams) -> ShellNet:
    net = ShellNet(params, seed.gateset)
    if seed.params == params:
        # keep shell placement: boundary-tie elements may sit one shell deeper
        # than plain routing would put them
        for src, dst in zip(seed.shells, net.shells):
            for e in src:
                if e.word.length:
                    dst.add(e)
        return net
    for e in seed.elements():
        if e.word.length == 0:
            continue
        net.try_insert(e.word, e.matrix, e.dist)
    return net


def build_heuristic(
    gs: GateSet, params: NetParams, seed_net: ShellNet, max_sweeps: int = 10_000
) -> tuple[ShellNet, BuildLog]:
    """Grow shells from products ``g * gamma`` until a sweep adds nothing.

    Each candidate ``h`` is routed to the shell whose window holds
    ``dist(h, I)``.  If no element of that shell lies within its resolution,
    ``h`` is inserted; otherwise ``h`` is divided on the right by the
    nearest such element and the quotient, which is now closer to the
    identity, is routed again into a strictly deeper shell.  Candidates
    within ``epsilon`` of the identity, or longer than ``L``, are dropped.
    """
    if seed_net.gateset is not gs and seed_net.gate_set_hash != gs.content_hash:
        raise InvalidInput("seed net was built over a different gate set")
    if seed_net.shells[0].non_identity() == 0:
        raise InvalidInput("seed net has an empty shell 0")
    net = _copy_net(seed_net, params)
    blog = BuildLog()
    eye = np.eye(gs.dim, dtype=np.complex128)
    eps, L = params.epsilon, params.L

    def process(word: Word, m: np.ndarray, sweep: int) -> bool:
        start = 0
        while True:
            r = _kernels.opnorm(m - eye)
            if r <= eps:
                blog.discarded_small += 1
                return False
            if word.length > L:
                blog.discarded_long += 1
                return False
            i = shell_index(r, params, start)
            if i is None:
                blog.discarded_small += 1
                return False
            shell = net.shells[i]
            j, dn = shell.nearest(m)
            if dn > shell.delta:
                shell.add(NetElement(word, m, r))
                blog.insertions.append(Insertion(sweep, i, word.length, r))
                return True
            g = shell.elements[j]
            word = word_concat(word, word_inverse(g.word))
            m = word.cached_value
            blog.division_checks += 1
            if _kernels.opnorm(m - eye) > shell.delta + DIVISION_SLACK:
                blog.division_failures += 1
                log.error("division bound violated at shell %d", i)
                return False
            start = i + 1

    # generators first, then full sweeps over G x (union of shells)
    added = 0
    for g in range(len(gs)):
        w = Word(gs, (g,), gs.matrices[g])
        added += process(w, w.cached_value, 0)
    blog.sweep_candidates.append(len(gs))
    blog.sweep_additions.append(added)

    for sweep in range(1, max_sweeps + 1):
        snapshot = [e for s in net.shells for e in s]
        added = 0
        for g in range(len(gs)):
            gw = Word(gs, (g,), gs.matrices[g])
            for e in snapshot:
                h = word_concat(gw, e.word)
                added += process(h, h.cached_value, sweep)
        blog.sweep_candidates.append(len(gs) * len(snapshot))
        blog.sweep_additions.append(added)
        log.debug("heuristic sweep %d: %d candidates, %d added", sweep, len(gs) * len(snapshot), added)
        if added == 0:
            blog.terminated = True
            break
    return net, blog


def build_complement(shell: Shell, q: float) -> Shell:
    """Candidate ``(r/q, r/q**2)`` shell from an ``(r, r/q)`` shell.

    ``H`` is the part of the shell within ``r/2`` of the identity.  For each
    pair ``U, V`` in ``H`` the nearest ``W`` of the shell is found; if
    ``dist(UV, W) <= r/q`` the quotient ``U V W^-1`` is emitted.  Emitted
    elements are sparsified at ``r/q**2``.  The output is not windowed and
    carries no net guarantee until audited.
    """
    if not q > 4:
        raise InvalidInput(f"complement construction needs q > 4, got {q}")
    r = shell.radius
    r_out, delta_out = r / q, r / q**2
    d = shell.stack.shape[1]
    out = Shell(shell.index + 1, r_out, delta_out, d, windowed=False)
    inner = [e for e in shell if e.dist <= r / 2]
    eye = np.eye(d, dtype=np.complex128)
    stack = shell.stack
    for u in inner:
        for v in inner:
            uv = u.matrix @ v.matrix
            j, dn = _kernels.nearest(stack, uv)
            if dn > r_out:
                continue
            w = shell.elements[j]
            word = word_concat(word_concat(u.word, v.word), word_inverse(w.word))
            m = uv @ mc.dagger(w.matrix)
            _, dd = out.nearest(m)
            if dd > delta_out:
                out.add(NetElement(word, m, _kernels.opnorm(m - eye)))
    return out


# ---------------------------------------------------------------------------
# audits and synthesis
# ---------------------------------------------------------------------------


@dataclass
class CoverageReport:
    shell: int
    samples: int
    covered: int
    worst_gap: float
    verdict: bool
    seed: int
    membership_violations: int = 0
    sparseness_violations: int = 0
    dist_mismatches: int = 0

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _stratified_targets(lo: float, hi: float, n: int) -> list[float]:
    return [lo + (hi - lo) * (j + 0.5) / n for j in range(n)]


def audit_shell(shell: Shell, d: int, samples: int, seed: int, lo: float | None = None) -> CoverageReport:
    """Re-verify a shell's invariants and sample its coverage.

    Targets are drawn at distances stratified across the shell window (or
    ``[0, radius]`` for an unwindowed candidate shell); each must lie
    within ``delta * (1 + 1e-6)`` of some element.
    """
    if samples < 1:
        raise InvalidInput("samples must be >= 1")
    eye = np.eye(d, dtype=np.complex128)
    membership = mismatches = 0
    for e in shell:
        r = _kernels.opnorm(word_value(Word(e.word.gateset, e.word.indices)) - eye)
        if abs(r - e.dist) > DIST_CHECK_TOL:
            mismatches += 1
        if shell.windowed and e.word.length > 0:
            if not shell.delta * (1 - 1e-12) <= e.dist <= shell.radius * (1 + 1e-12):
                membership += 1
        elif not shell.windowed and e.dist > shell.radius * (1 + 1e-12):
            membership += 1
    sparse = 0
    stack = shell.stack
    for a in range(len(shell) - 1):
        dd = _kernels.dists(stack[a + 1 :], stack[a])
        sparse += int(np.sum(dd < shell.delta * (1 - 1e-9)))

    if lo is None:
        lo = shell.delta if shell.windowed else 0.0
    covered = 0
    worst = 0.0
    for j, t in enumerate(_stratified_targets(lo, shell.radius, samples)):
        x = mc.sample_at_distance(d, min(t, 2.0), mc.rng(seed, shell.index, j))
        _, gap = shell.nearest(x)
        worst = max(worst, gap)
        covered += gap <= shell.delta * (1 + 1e-6)
    return CoverageReport(
        shell=shell.index,
        samples=samples,
        covered=covered,
        worst_gap=worst,
        verdict=worst <= shell.delta * (1 + 1e-6),
        seed=seed,
        membership_violations=membership,
        sparseness_violations=sparse,
        dist_mismatches=mismatches,
    )


def audit_net(net: ShellNet, samples_per_shell: int, seed: int) -> list[CoverageReport]:
    """One :class:`CoverageReport` per shell."""
    return [audit_shell(s, net.params.d, samples_per_shell, seed) for s in net.shells]


def zoom_synthesize(v: np.ndarray, net: ShellNet) -> tuple[Word, float]:
    """Approximate ``v`` by ``U_0 U_1 ... U_k`` with ``U_i`` from shell i.

    The residual is peeled on the left, ``W_{i+1} = U_i^-1 W_i``, so that
    ``v = U_0 ... U_k W_{k+1}``.  The achieved distance is measured from the
    assembled word, not inferred from the shell resolutions.
    """
    v = mc.as_matrix(v)
    if v.shape != (net.params.d, net.params.d):
        raise InvalidInput(f"target has shape {v.shape}, net dim is {net.params.d}")
    gs = net.gateset
    word = identity_word(gs)
    w = v
    for shell in net.shells:
        if len(shell) == 0:
            raise SynthesisGap(shell.index)
        j, _ = shell.nearest(w)
        u = shell.elements[j]
        word = word_concat(word, u.word)
        w = mc.dagger(u.matrix) @ w
    return word, mc.dist(word.value, v)


@dataclass
class TelescopeResult:
    passed: bool
    samples: int
    worst_gap: float
    witness: np.ndarray | None = field(default=None, repr=False)


def telescope_check(
    outer: Shell,
    inner: Shell,
    samples: int = 1000,
    seed: int = 0,
    targets: list[np.ndarray] | None = None,
) -> TelescopeResult:
    """Check that ``outer * inner`` is an ``(r_outer, delta_inner)`` net.

    Diagnostic only: targets are sampled in the ball of radius
    ``outer.radius`` (or supplied) and each must be within
    ``inner.delta`` of some product.  The first failing target is returned
    as witness.
    """
    if outer.delta > inner.radius * (1 + 1e-12):
        raise InvalidInput(f"telescoping needs delta_1 <= r_2, got {outer.delta} > {inner.radius}")
    if len(outer) == 0 or len(inner) == 0:
        raise SynthesisGap(outer.index if len(outer) == 0 else inner.index)
    d = outer.stack.shape[1]
    products = np.ascontiguousarray((outer.stack[:, None] @ inner.stack[None, :]).reshape(-1, d, d))
    if targets is None:
        targets = [
            mc.sample_at_distance(d, t, mc.rng(seed, outer.index, inner.index, j))
            for j, t in enumerate(_stratified_targets(0.0, min(outer.radius, 2.0), samples))
        ]
    worst = 0.0
    witness = None
    for x in targets:
        _, gap = _kernels.nearest(products, x)
        worst = max(worst, gap)
        if gap > inner.delta * (1 + 1e-9) and witness is None:
            witness = x
    return TelescopeResult(witness is None, len(targets), worst, witness)
