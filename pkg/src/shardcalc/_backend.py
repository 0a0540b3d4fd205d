"""Backend selection: compiled extension if built, pure Python otherwise.

Set SHARDCALC_PURE=1 to force the pure backend even when the extension is
available.  `kernel` exposes pivot_step, sign_eval, quick_check; `BACKEND`
names the active implementation.
"""

import os

if os.environ.get("SHARDCALC_PURE") == "1":
    from . import _kernel_py as kernel
else:
    try:
        from . import _kernel as kernel  # type: ignore[no-redef]
    except ImportError:
        from . import _kernel_py as kernel

BACKEND = kernel.BACKEND_NAME
