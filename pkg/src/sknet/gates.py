"""Generating sets and words over them.

A :class:`GateSet` is an ordered, inverse-closed list of special unitaries.
Words are tuples of indices into it; the value of ``[i1, i2, ..., im]`` is
the left-to-right matrix product ``g_i1 @ g_i2 @ ... @ g_im``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import matcore as mc
from .errors import InvalidInput

log = logging.getLogger(__name__)

DUPLICATE_TOL = 1e-12
MAX_QUBITS = 4

HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
K_GATE = np.diag([1, 1j]).astype(np.complex128)
PI8_GATE = np.diag([1, np.exp(1j * np.pi / 8)]).astype(np.complex128)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
)


@dataclass(frozen=True)
class Gate:
    label: str
    matrix: np.ndarray = field(repr=False)
    inverse_label: str
    phase_applied: complex = 1.0 + 0j


class GateSet:
    """Inverse-closed, determinant-normalized generating set.

    Construct through :meth:`from_matrices` (normalizes, collapses
    duplicates and repairs inverse closure) or directly from already
    validated :class:`Gate` objects.
    """

    def __init__(self, name: str, gates: Sequence[Gate], tol: float = mc.TOL.unitary_tol):
        gates = list(gates)
        if not gates:
            raise InvalidInput("gate set is empty")
        self.name = name
        self.dim = len(gates[0].matrix)
        self._gates: list[Gate] = []
        self._index: dict[str, int] = {}
        self._inverse: list[int] = []
        self._tol = tol
        for g in gates:
            self._append(g)
        self._link_inverses()

    def _append(self, g: Gate) -> int:
        m = mc.as_matrix(g.matrix)
        if len(m) != self.dim:
            raise InvalidInput(f"gate {g.label!r} has dim {len(m)}, expected {self.dim}")
        if not mc.is_unitary(m, self._tol) or not mc.is_special(m, self._tol):
            raise InvalidInput(f"gate {g.label!r} is not in SU({self.dim})")
        if g.label in self._index:
            raise InvalidInput(f"duplicate label {g.label!r}")
        self._index[g.label] = len(self._gates)
        self._gates.append(Gate(g.label, m, g.inverse_label, g.phase_applied))
        return len(self._gates) - 1

    def _link_inverses(self) -> None:
        self._inverse = []
        for g in self._gates:
            j = self._index.get(g.inverse_label)
            if j is None:
                raise InvalidInput(f"inverse {g.inverse_label!r} of {g.label!r} not in gate set")
            if mc.dist(self._gates[j].matrix, mc.dagger(g.matrix)) > self._tol:
                raise InvalidInput(f"{g.inverse_label!r} is not the adjoint of {g.label!r}")
            self._inverse.append(j)
        self._stack = np.stack([g.matrix for g in self._gates])

    @classmethod
    def from_matrices(
        cls,
        name: str,
        items: Iterable[tuple[str, np.ndarray]],
        inverses: dict[str, str] | None = None,
        warn_density: bool = True,
        repair_level: int = logging.WARNING,
    ) -> "GateSet":
        """Normalize into SU(d), collapse duplicates and close under inverse.

        ``inverses`` optionally maps labels to the label of their inverse.
        Missing adjoints are added with label ``<label>dg``; each repair is
        logged.
        """
        inverses = dict(inverses or {})
        gates: list[Gate] = []

        def find(m):
            for g in gates:
                if mc.dist(g.matrix, m) <= DUPLICATE_TOL:
                    return g
            return None

        for label, raw in items:
            m, phase = mc.to_special(raw)
            dup = find(m)
            if dup is not None:
                log.info("gate %r duplicates %r; collapsed", label, dup.label)
                continue
            gates.append(Gate(label, m, "", phase))

        labels = {g.label: g for g in gates}
        for g in list(gates):
            declared = inverses.get(g.label)
            if declared and declared in labels:
                if mc.dist(labels[declared].matrix, mc.dagger(g.matrix)) > mc.TOL.unitary_tol:
                    raise InvalidInput(f"declared inverse {declared!r} of {g.label!r} is not its adjoint")
            if find(mc.dagger(g.matrix)) is None:
                new_label = f"{g.label}dg"
                while new_label in labels:
                    new_label += "'"
                log.log(repair_level, "gate set %r: adding missing inverse %r of %r", name, new_label, g.label)
                gates.append(Gate(new_label, mc.dagger(g.matrix), g.label, complex(np.conj(g.phase_applied))))
                labels[new_label] = gates[-1]
        linked = [Gate(g.label, g.matrix, find(mc.dagger(g.matrix)).label, g.phase_applied) for g in gates]
        if warn_density:
            log.warning("gate set %r: density in SU(%d) is assumed, not verified", name, len(linked[0].matrix))
        return cls(name, linked)

    # -- container protocol -------------------------------------------------

    @property
    def gates(self) -> tuple[Gate, ...]:
        return tuple(self._gates)

    def __len__(self) -> int:
        return len(self._gates)

    def __getitem__(self, i: int) -> Gate:
        return self._gates[i]

    def index(self, label: str) -> int:
        return self._index[label]

    def inverse_index(self, i: int) -> int:
        return self._inverse[i]

    @property
    def matrices(self) -> np.ndarray:
        """Read-only ``(n, d, d)`` stack of gate matrices."""
        return self._stack

    @cached_property
    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.dim}".encode())
        for g in self._gates:
            h.update(g.label.encode())
            h.update(g.inverse_label.encode())
            h.update((np.round(g.matrix, 10) + 0.0).tobytes())
        return h.hexdigest()[:16]

    def __repr__(self) -> str:
        return f"GateSet({self.name!r}, dim={self.dim}, gates={[g.label for g in self._gates]})"

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "gates": [
                {"label": g.label, "inverse": g.inverse_label, "matrix": mc.matrix_to_json(g.matrix)}
                for g in self._gates
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GateSet":
        try:
            name = obj["name"]
            dim = int(obj["dim"])
            raw = [(g["label"], mc.matrix_from_json(g["matrix"])) for g in obj["gates"]]
            inverses = {g["label"]: g["inverse"] for g in obj["gates"] if g.get("inverse")}
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"malformed gate-set JSON: {exc}") from exc
        if any(len(m) != dim for _, m in raw):
            raise InvalidInput("gate dimension does not match declared dim")
        # declared inverses are honoured only if they are actual adjoints
        gs = cls.from_matrices(name, raw, inverses)
        return gs

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "GateSet":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


class PlaceholderGateSet(GateSet):
    """Growable alphabet whose letters are arbitrary registered unitaries.

    Used by test backends that hand out approximations without a real gate
    word: each registration appends the matrix and its adjoint so words over
    it keep full inverse/concat semantics.
    """

    def __init__(self, dim: int, name: str = "placeholder"):
        self.name = name
        self.dim = dim
        self._gates = []
        self._index = {}
        self._inverse = []
        self._tol = mc.TOL.unitary_tol
        self._stack = np.zeros((0, dim, dim), dtype=np.complex128)

    def register(self, m: np.ndarray) -> int:
        n = len(self._gates)
        a, b = f"p{n}", f"p{n + 1}"
        self._gates.append(Gate(a, mc.as_matrix(m), b))
        self._gates.append(Gate(b, mc.dagger(mc.as_matrix(m)), a))
        self._index[a], self._index[b] = n, n + 1
        self._inverse += [n + 1, n]
        self._stack = np.concatenate([self._stack, np.stack([self._gates[n].matrix, self._gates[n + 1].matrix])])
        self.__dict__.pop("content_hash", None)
        return n


def _embed(gate: np.ndarray, first: int, n_qubits: int) -> np.ndarray:
    """``I (x) gate (x) I`` with ``gate`` acting on qubits starting at ``first``."""
    k = int(np.log2(len(gate)))
    left = np.eye(2**first)
    right = np.eye(2 ** (n_qubits - first - k))
    return np.kron(np.kron(left, gate), right)


def standard_gateset(n_qubits: int) -> GateSet:
    """Hadamard, K, pi/8 on every qubit and CNOT on adjacent ordered pairs.

    Each gate is lifted to SU(2**n) by a global phase and closed under
    inverse.  At one qubit the normalized Hadamard squares to ``-I``, so its
    adjoint ``Hdg`` is a separate letter.
    """
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise InvalidInput(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    items: list[tuple[str, np.ndarray]] = []
    for q in range(n_qubits):
        sfx = "" if n_qubits == 1 else str(q)
        for name, g in (("H", HADAMARD), ("K", K_GATE), ("T", PI8_GATE)):
            items.append((f"{name}{sfx}", _embed(g, q, n_qubits)))
    swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
    cnot_rev = swap @ CNOT @ swap
    for q in range(n_qubits - 1):
        items.append((f"CX{q}{q + 1}", _embed(CNOT, q, n_qubits)))
        items.append((f"CX{q + 1}{q}", _embed(cnot_rev, q, n_qubits)))
    return GateSet.from_matrices(f"standard-{n_qubits}q", items, warn_density=False, repair_level=logging.DEBUG)


# ---------------------------------------------------------------------------
# words
# ---------------------------------------------------------------------------


class Word:
    """Sequence of gate indices with a lazily cached matrix value.

    The cache is filled at most once in effect: concurrent fills compute the
    same product, so the race is benign.
    """

    __slots__ = ("gateset", "indices", "_value")

    def __init__(self, gateset: GateSet, indices: Iterable[int] = (), value: np.ndarray | None = None):
        self.gateset = gateset
        self.indices = tuple(int(i) for i in indices)
        self._value = value

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def length(self) -> int:
        return len(self.indices)

    @property
    def cached_value(self) -> np.ndarray | None:
        return self._value

    @property
    def value(self) -> np.ndarray:
        if self._value is None:
            self._value = word_value(self, self.gateset)
        return self._value

    def __eq__(self, other) -> bool:
        return isinstance(other, Word) and other.gateset is self.gateset and other.indices == self.indices

    def __hash__(self) -> int:
        return hash(self.indices)

    def __repr__(self) -> str:
        return f"Word({list(self.indices)})"

    def labels(self) -> list[str]:
        return [self.gateset[i].label for i in self.indices]


def identity_word(gs: GateSet) -> Word:
    return Word(gs, (), np.eye(gs.dim, dtype=np.complex128))


def word_value(w: Word, gs: GateSet | None = None) -> np.ndarray:
    """Ordered product of the word's gate matrices; fills the cache."""
    gs = gs or w.gateset
    n = len(gs)
    out = np.eye(gs.dim, dtype=np.complex128)
    mats = gs.matrices
    for i in w.indices:
        if not 0 <= i < n:
            raise IndexError(f"gate index {i} out of range for {n} gates")
        out = out @ mats[i]
    if w.gateset is gs:
        w._value = out
    return out


def word_inverse(w: Word, gs: GateSet | None = None) -> Word:
    gs = gs or w.gateset
    inv = [gs.inverse_index(i) for i in reversed(w.indices)]
    value = None if w.cached_value is None else mc.dagger(w.cached_value)
    return Word(gs, inv, value)


def word_concat(u: Word, v: Word) -> Word:
    if u.gateset is not v.gateset:
        raise InvalidInput("cannot concatenate words over different gate sets")
    value = None
    if u.cached_value is not None and v.cached_value is not None:
        value = u.cached_value @ v.cached_value
    return Word(u.gateset, u.indices + v.indices, value)


def word_join(*words: Word) -> Word:
    out = words[0]
    for w in words[1:]:
        out = word_concat(out, w)
    return out
