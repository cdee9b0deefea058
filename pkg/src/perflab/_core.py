"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting ``PERFLAB_PURE_PYTHON=1``
forces the numpy fallback.
"""
import os

from . import _fallback

BACKEND = "python"
dcd_pass = _fallback.dcd_pass
gram_rbf = _fallback.gram_rbf
predict_rbf = _fallback.predict_rbf

if not os.environ.get("PERFLAB_PURE_PYTHON"):
    try:
        from . import _speedups
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "compiled"
        dcd_pass = _speedups.dcd_pass
        gram_rbf = _speedups.gram_rbf
        predict_rbf = _speedups.predict_rbf
