"""Backend selection for the propagator hot loops.

The compiled extension ``ionphonon._kernels`` is preferred; if it is missing
(no compiler at install time) or ``IONPHONON_PURE_PYTHON=1`` is set, the
numpy implementation in ``ionphonon._fallback`` is used instead.
"""
import os

from ionphonon import _fallback

_force_python = os.environ.get("IONPHONON_PURE_PYTHON", "").strip() not in ("", "0")

try:
    if _force_python:
        raise ImportError("pure-python backend requested")
    from ionphonon import _kernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _fallback
    BACKEND = "python"

csr_matvec = _impl.csr_matvec
lanczos = _impl.lanczos
krylov_combine = _impl.krylov_combine


def backends():
    """Map of every importable backend name to its module."""
    found = {"python": _fallback}
    try:
        from ionphonon import _kernels

        found["cython"] = _kernels
    except ImportError:
        pass
    return found
