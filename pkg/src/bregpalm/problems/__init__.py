"""The three experiment families as coupled two-block problems."""

from .base import CoupledProblem
from .nmf import SparseNmfProblem, make_synthetic_nmf
from .qfp import QfpProblem, load_qfp_problem1, make_random_qfp
from .sigrec import SignalRecoveryProblem, make_signal_recovery

__all__ = [
    "CoupledProblem",
    "SignalRecoveryProblem",
    "make_signal_recovery",
    "QfpProblem",
    "load_qfp_problem1",
    "make_random_qfp",
    "SparseNmfProblem",
    "make_synthetic_nmf",
]
