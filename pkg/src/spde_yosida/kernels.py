"""Backend selection for the resolvent kernels.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``SPDE_YOSIDA_PURE`` is set to a non-empty value, the
NumPy implementation is used. ``BACKEND`` names the active one.
"""
import os
from contextlib import contextmanager

from . import _pykernels

if os.environ.get("SPDE_YOSIDA_PURE"):
    _impl = _pykernels
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "python" if _impl is _pykernels else "compiled"

resolvent_power = _impl.resolvent_power
resolvent_expm1 = _impl.resolvent_expm1
resolvent_table = _impl.resolvent_table


def available_backends():
    """Return ``{name: module}`` for every importable backend."""
    backends = {"python": _pykernels}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        backends["compiled"] = _kernels
    return backends


@contextmanager
def use_backend(name):
    """Temporarily route every kernel call through backend ``name``."""
    global resolvent_power, resolvent_expm1, resolvent_table, BACKEND
    impl = available_backends().get(name)
    if impl is None:
        raise ValueError(f"backend {name!r} is not available")
    saved = resolvent_power, resolvent_expm1, resolvent_table, BACKEND
    resolvent_power, resolvent_expm1, resolvent_table = impl.resolvent_power, impl.resolvent_expm1, impl.resolvent_table
    BACKEND = name
    try:
        yield impl
    finally:
        resolvent_power, resolvent_expm1, resolvent_table, BACKEND = saved
