"""Conformally invariant quantizations of symbols via tractor calculus."""

from .critical_weights import sigma as critical_set
from .quantization import QuantizationOp, build_critical_Q, build_Q, nine_term_ledger, p_tilde

__version__ = "0.1.0"

__all__ = ["QuantizationOp", "build_Q", "build_critical_Q", "critical_set", "nine_term_ledger",
           "p_tilde", "__version__"]
