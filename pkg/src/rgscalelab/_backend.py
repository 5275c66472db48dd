"""Select the compiled core or the numpy fallback at import time."""

import os

if os.environ.get("RGSCALELAB_PURE_PYTHON"):
    from . import _fallback as core

    BACKEND = "python"
else:
    try:
        from . import _core as core
    except ImportError:
        from . import _fallback as core

        BACKEND = "python"
    else:
        BACKEND = "cython"

__all__ = ["core", "BACKEND"]
