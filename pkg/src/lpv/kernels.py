"""Hot kernels: the compiled extension when it is built, the Python versions otherwise.

Set ``LPV_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

if os.environ.get("LPV_PURE_PYTHON"):
    from ._pykernels import linearize

    BACKEND = "python"
else:
    try:
        from ._ckernels import linearize  # type: ignore[import-not-found]

        BACKEND = "cython"
    except ImportError:
        from ._pykernels import linearize

        BACKEND = "python"

__all__ = ["linearize", "BACKEND"]
