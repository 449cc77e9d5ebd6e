"""Solovay-Kitaev gate synthesis over shell epsilon-nets.

Modules: :mod:`~sknet.matcore` (norms, exp/log, sampling), :mod:`~sknet.gates`
(gate sets and words), :mod:`~sknet.nets` (shell nets, builders, audits,
zooming), :mod:`~sknet.skc` (commutator recursion) and :mod:`~sknet.cli`.
"""

from ._kernels import backend_name
from .errors import (
    BudgetExceeded,
    CertificateViolation,
    DimensionMismatch,
    InvalidInput,
    OutOfBranch,
    SknetError,
    SynthesisGap,
)
from .gates import GateSet, Word, standard_gateset, word_value
from .matcore import TOL, Tolerances, dist, haar_sample, mexp, mlog_principal, op_norm
from .nets import NetParams, ShellNet, audit_net, build_exhaustive, build_heuristic, zoom_synthesize
from .skc import MockBackend, NetBackend, SKConstants, decompose_lambda, iterations_needed, sk_recurse

__version__ = "0.1.0"
