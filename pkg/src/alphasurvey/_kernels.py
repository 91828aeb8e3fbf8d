"""Collision-kernel backend selection.

The compiled Cython kernel is preferred; the numpy fallback is used when the
extension is missing or when ``ALPHASURVEY_PURE`` is set in the environment
(useful for benchmarking the two side by side).
"""

import os

if os.environ.get("ALPHASURVEY_PURE"):
    from . import _collision_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _collision as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _collision_py as _impl

        BACKEND = "python"

poses_valid = _impl.poses_valid
all_poses_valid = _impl.all_poses_valid
