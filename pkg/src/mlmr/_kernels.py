"""Backend selection for the hot kernels.

The compiled extension is used when importable; set ``MLMR_PURE_PYTHON=1``
to force the pure-Python fallback.
"""

import os

from . import _fallback

BACKEND = "python"
if not os.environ.get("MLMR_PURE_PYTHON"):
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
else:
    _impl = _fallback

max_weight_matching = _impl.max_weight_matching
mlmr_block = _impl.mlmr_block
