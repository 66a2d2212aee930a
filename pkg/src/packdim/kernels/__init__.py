"""Hot-kernel dispatch: compiled extension when built, numpy fallback otherwise.

Set PACKDIM_NO_EXT=1 to force the pure-Python path (used by the benchmark
and the cross-backend equivalence tests).  Both backends implement the
same arithmetic and return identical results.
"""

import os

if os.environ.get("PACKDIM_NO_EXT"):
    from . import _pyref as _impl

    HAVE_EXT = False
else:
    try:
        from . import _ext as _impl  # type: ignore[attr-defined]

        HAVE_EXT = True
    except ImportError:
        from . import _pyref as _impl

        HAVE_EXT = False

BACKEND = _impl.BACKEND
escape_grid = _impl.escape_grid
greedy_disc_pack = _impl.greedy_disc_pack

__all__ = ["BACKEND", "HAVE_EXT", "escape_grid", "greedy_disc_pack"]
