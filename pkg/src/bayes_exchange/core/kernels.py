"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``BAYES_EXCHANGE_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

BACKEND = "python"

if os.environ.get("BAYES_EXCHANGE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _fallback
else:
    _impl = _fallback

refine = _impl.refine
class_sums = _impl.class_sums
