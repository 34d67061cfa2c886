"""Hot kernels for message passing, compiled when available.

Set ``RELHER_PURE=1`` to force the numpy fallback. ``IMPL`` records which
implementation was selected at import time.
"""

import os

from . import _fallback

if os.environ.get("RELHER_PURE") == "1":
    _impl = _fallback
    IMPL = "fallback"
else:
    try:
        from . import _speedups as _impl
        IMPL = "compiled"
    except ImportError:
        _impl = _fallback
        IMPL = "fallback"

scatter_max = _impl.scatter_max
scatter_max_grad = _impl.scatter_max_grad
segment_sum = _impl.segment_sum
mish = _impl.mish
mish_grad = _impl.mish_grad

fallback = _fallback
