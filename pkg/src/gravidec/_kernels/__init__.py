"""Kernel selection: the compiled extension when available, else numpy.

Set ``GRAVIDEC_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("GRAVIDEC_PURE_PYTHON", "") != "1":
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

psi_big_sq_phi_mean = _impl.psi_big_sq_phi_mean

__all__ = ["BACKEND", "psi_big_sq_phi_mean"]
