"""Selects the compiled enumeration kernel when available.

Set KMTHETA_BACKEND=python to force the pure-Python fallback.
"""

import os

if os.environ.get("KMTHETA_BACKEND", "").lower() == "python":
    from . import _fpkernel_py as kernel
    BACKEND = "python"
else:
    try:
        from . import _fpkernel as kernel  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        from . import _fpkernel_py as kernel
        BACKEND = "python"

enumerate_ball = kernel.enumerate_ball
histogram_ball = kernel.histogram_ball

__all__ = ["BACKEND", "enumerate_ball", "histogram_ball"]
