"""Hot numeric kernels with a compiled core and a pure NumPy fallback.

The compiled extension (``_ckernels``) is preferred when importable; the
NumPy twins produce bit-identical results, only slower. Selection can be
forced with the environment variable ``GAZESEG_KERNELS``:

* ``auto`` (default) — compiled if built, fallback otherwise;
* ``py`` — force the NumPy fallback;
* ``cy`` — require the compiled extension, raise if missing.
"""

from __future__ import annotations

import os

from . import slic_py, stump_py

_choice = os.environ.get("GAZESEG_KERNELS", "auto").lower()
if _choice not in ("auto", "py", "cy"):
    raise ValueError(f"GAZESEG_KERNELS must be auto, py or cy, got {_choice!r}")

_ext = None
if _choice in ("auto", "cy"):
    try:
        from . import _ckernels as _ext
    except ImportError:
        if _choice == "cy":
            raise ImportError(
                "GAZESEG_KERNELS=cy but the compiled extension is not built; "
                "reinstall the package or use GAZESEG_KERNELS=py"
            )
        _ext = None

if _ext is not None:
    slic_iterate = _ext.slic_iterate
    stump_scan = _ext.stump_scan
    BACKEND = "cy"
else:
    slic_iterate = slic_py.slic_iterate
    stump_scan = stump_py.stump_scan
    BACKEND = "py"


def available_backends() -> dict:
    """Map backend name to its (slic_iterate, stump_scan) pair."""
    out = {"py": (slic_py.slic_iterate, stump_py.stump_scan)}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["cy"] = (_ckernels.slic_iterate, _ckernels.stump_scan)
    return out
