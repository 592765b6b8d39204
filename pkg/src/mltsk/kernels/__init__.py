"""Hot kernels: compiled extension when built, numpy fallback otherwise.

``BACKEND`` names the implementation picked at import time. Both modules
expose the same functions and stay importable individually (see
``available_backends``) so they can be tested and benchmarked against each
other.
"""

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_impl = _ckernels if _ckernels is not None else _pykernels
BACKEND = "cython" if _ckernels is not None else "python"

firing_strengths = _impl.firing_strengths
fuzzy_map = _impl.fuzzy_map
fcm_memberships = _impl.fcm_memberships
soft_threshold = _impl.soft_threshold
label_ranks = _impl.label_ranks
instance_metrics = _impl.instance_metrics


def available_backends():
    """Mapping of backend name to kernel module for every importable backend."""
    out = {"python": _pykernels}
    if _ckernels is not None:
        out["cython"] = _ckernels
    return out
