"""Monte Carlo kernel backend selection.

Prefers the compiled extension; falls back to the pure-Python implementation
when it is not built.  Set OBSIM_PURE_PYTHON=1 to force the fallback.  Both
backends produce bit-identical results for the same arguments.
"""

import os

if os.environ.get("OBSIM_PURE_PYTHON"):
    from . import pykern as _impl
else:
    try:
        from . import fastkern as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import pykern as _impl

BACKEND = _impl.BACKEND_NAME
lg_pair_trials = _impl.lg_pair_trials
chsh_trials = _impl.chsh_trials
