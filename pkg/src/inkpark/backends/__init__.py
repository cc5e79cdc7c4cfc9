"""Backend selection for the hot kernels.

The compiled Cython extension is preferred when importable; otherwise the
pure NumPy fallback is used. Both produce bit-identical results (verified
by tests/test_backends.py). Set ``INKPARK_BACKEND=python`` or ``=compiled``
to force a choice; forcing ``compiled`` raises if the extension is absent.
"""

import os

from . import _pykernels

_forced = os.environ.get("INKPARK_BACKEND", "").strip().lower()

if _forced in ("python", "py", "pure"):
    _impl = _pykernels
    BACKEND = "python"
elif _forced in ("", "compiled", "c"):
    try:
        from . import _ckernels as _impl
        BACKEND = "compiled"
    except ImportError:
        if _forced:
            raise
        _impl = _pykernels
        BACKEND = "python"
else:
    raise RuntimeError(f"unknown INKPARK_BACKEND value: {_forced!r}")

smo_solve = _impl.smo_solve
grow_tree = _impl.grow_tree


def available_backends():
    """Name -> module for every importable backend (for benchmarks/tests)."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["compiled"] = _ckernels
    except ImportError:
        pass
    return out
