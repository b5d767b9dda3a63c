"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; setting the
environment variable ``HAZBOOST_PURE_PYTHON=1`` forces the numpy fallback.
``BACKEND`` records which implementation is active.
"""

import os

BACKEND = "python"

_flag = os.environ.get("HAZBOOST_PURE_PYTHON", "").strip().lower()
if _flag in ("", "0", "false", "no"):
    try:
        from ._core import accumulate_overlap, scan_axis_splits  # noqa: F401

        BACKEND = "cython"
    except ImportError:
        pass

if BACKEND == "python":
    from ._pure import accumulate_overlap, scan_axis_splits  # noqa: F401

__all__ = ["BACKEND", "accumulate_overlap", "scan_axis_splits"]
