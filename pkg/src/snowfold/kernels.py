"""Kernel backend chosen at import: the Cython extension when it is built,
otherwise the numpy fallback.  Set ``SNOWFOLD_PURE_PYTHON=1`` to force the
fallback."""

import os

from . import _fallback

if os.environ.get("SNOWFOLD_PURE_PYTHON"):
    _impl = _fallback
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _fallback

BACKEND = "python" if _impl is _fallback else "cython"

light_sweep = _impl.light_sweep
subset_tables = _impl.subset_tables
pair_minimizers = _impl.pair_minimizers
