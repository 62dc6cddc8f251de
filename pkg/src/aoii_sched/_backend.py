"""Simulation kernel selection.

The compiled kernel is used when the extension built; otherwise the
pure-Python kernel takes over.  ``AOII_SCHED_BACKEND=python|cython``
overrides the choice, as does the ``backend`` field of a SimConfig.
"""

from __future__ import annotations

import os

from . import _kernel_py

try:
    from . import _kernel as _kernel_cy
except ImportError:
    _kernel_cy = None

HAVE_CYTHON = _kernel_cy is not None


def available_backends() -> tuple[str, ...]:
    return ("cython", "python") if HAVE_CYTHON else ("python",)


def get_backend(name: str | None = None):
    """Resolve a kernel module from a backend name.

    ``None``/"auto" prefers the compiled kernel, honouring the
    AOII_SCHED_BACKEND environment variable.
    """
    if name is None or name == "auto":
        name = os.environ.get("AOII_SCHED_BACKEND", "auto")
    if name in (None, "auto"):
        return _kernel_cy if HAVE_CYTHON else _kernel_py
    if name == "python":
        return _kernel_py
    if name == "cython":
        if _kernel_cy is None:
            raise RuntimeError("compiled kernel unavailable; reinstall with a "
                               "C toolchain or use backend='python'")
        return _kernel_cy
    raise ValueError(f"unknown backend {name!r}; expected 'auto', 'cython' or 'python'")
