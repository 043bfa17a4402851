"""Hot-loop kernels with a compiled backend and a numpy fallback.

The compiled extension is used when it imports; set ``CQSIM_PURE_PYTHON=1``
to force the fallback.  ``BACKEND`` names the active one.
"""
import os

from . import _pykernels as python

compiled = None
if os.environ.get("CQSIM_PURE_PYTHON", "") != "1":
    try:
        from . import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None

_active = compiled if compiled is not None else python
BACKEND = "cython" if compiled is not None else "python"

em_paths = _active.em_paths
pair_rk4 = _active.pair_rk4
CayleyStepper = _active.CayleyStepper


def get_backend(name=None):
    """Return the kernel module called ``name`` ('cython' or 'python'), or the active one."""
    if name is None:
        return _active
    if name == "python":
        return python
    if name == "cython":
        if compiled is None:
            raise ImportError("compiled kernels are not available")
        return compiled
    raise ValueError(f"unknown backend {name!r}")
