"""Kernel backend selection.

The compiled extension is used when it imports; otherwise (or when
``DISENTANGLER_PURE_PYTHON=1``) the numpy implementation is used. Both
backends expose the same four functions.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("DISENTANGLER_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass

apply_gate_2q = _impl.apply_gate_2q
pair_rdms = _impl.pair_rdms
single_rdms = _impl.single_rdms
pqc_expectations = _impl.pqc_expectations

__all__ = [
    "BACKEND",
    "apply_gate_2q",
    "pair_rdms",
    "single_rdms",
    "pqc_expectations",
]
