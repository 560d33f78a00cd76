"""Backend selection for the column-map kernels.

The compiled extension is preferred when present; set the environment
variable ``FERMICHAIN_KERNELS=py`` (or ``python``) before import to force
the pure-numpy implementation, or ``FERMICHAIN_KERNELS=cy`` to require the
compiled one (raising if it is unavailable).
"""

from __future__ import annotations

import os

_choice = os.environ.get("FERMICHAIN_KERNELS", "").strip().lower()

if _choice in ("py", "python"):
    from . import _kernels_py as _impl
elif _choice in ("cy", "cython"):
    from . import _kernels_cy as _impl  # type: ignore[no-redef]
elif _choice == "":
    try:
        from . import _kernels_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as _impl
else:
    raise ValueError(f"unknown FERMICHAIN_KERNELS value: {_choice!r}")

BACKEND = _impl.BACKEND

compose = _impl.compose
compose_batch = _impl.compose_batch
trace_batch = _impl.trace_batch
expect_batch = _impl.expect_batch
inner_batch = _impl.inner_batch
scatter = _impl.scatter
pair_expect = _impl.pair_expect
