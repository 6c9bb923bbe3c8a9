"""Kernel dispatch.

Uses the compiled extension when it imports, else the numpy fallback.
Set POSE3R_PURE_PYTHON=1 to force the fallback.
"""
import os

from . import _kernels_py

_compiled = None
if not os.environ.get("POSE3R_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _kernels_py


def get_backend(name):
    """Kernel module by name ("compiled" or "python")."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(name)


def set_backend(name):
    """Switch the active backend; returns the previous name."""
    global _impl, BACKEND
    prev = BACKEND
    _impl = get_backend(name)
    BACKEND = name
    return prev


def available_backends():
    return ["python"] + (["compiled"] if _compiled is not None else [])


def hidden_matrix(K, s3):
    return _impl.hidden_matrix(K, s3)


def hidden_det_samples(K, nodes):
    return _impl.hidden_det_samples(K, nodes)


def cost_terms(K22, x):
    return _impl.cost_terms(K22, x)


def inlier_mask(*args):
    return _impl.inlier_mask(*args)
