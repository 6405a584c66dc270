"""Hot-loop dispatch: compiled kernels when built, numpy otherwise.

Set ``TRUNCNOISE_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

import numpy as np

from . import _fallback

_compiled = None
if not os.environ.get("TRUNCNOISE_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "numpy"
_impl = _compiled if _compiled is not None else _fallback


def _vec(v):
    return np.ascontiguousarray(v, dtype=np.float64)


def stack_forward(x, a, b, f, slope):
    """Unnormalized stack ``a**2 + sum_j b_j**2 * sigmoid(slope * (x - f_j))``."""
    return _impl.stack_forward(_vec(x), float(a), _vec(b), _vec(f), float(slope))


def stack_backward(x, a, b, f, slope, gs):
    """Adjoints ``(dA, dB, dF)`` of ``sum_i gs_i * s_i`` for the stack above."""
    ga, gb, gf = _impl.stack_backward(_vec(x), float(a), _vec(b), _vec(f), float(slope), _vec(gs))
    return float(ga), np.asarray(gb), np.asarray(gf)


def conv_full(a, b):
    return np.asarray(_impl.conv_full(_vec(a), _vec(b)))


def use_backend(name):
    """Switch backends at runtime (``"cython"`` or ``"numpy"``); returns the previous one."""
    global _impl, BACKEND
    previous = BACKEND
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        _impl = _compiled
    elif name == "numpy":
        _impl = _fallback
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name
    return previous


def compiled_available():
    return _compiled is not None
