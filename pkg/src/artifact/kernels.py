"""Backend selection for the numeric kernels.

The compiled module is used when it imports; set ARTIFACT_PURE_PYTHON=1 to
force the numpy versions.
"""

import os

from . import _pykernels

if os.environ.get("ARTIFACT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

AFFINE = _pykernels.AFFINE
PUSH = _pykernels.PUSH

apply_flat = _impl.apply_flat
iterate_flat = _impl.iterate_flat
separated_count = _impl.separated_count

__all__ = ["BACKEND", "AFFINE", "PUSH", "apply_flat", "iterate_flat", "separated_count"]
