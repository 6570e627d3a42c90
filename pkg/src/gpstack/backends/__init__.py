"""Backend selection for the pairwise kernel primitives.

The compiled Cython core is preferred when it was built; otherwise the
numpy fallback in ``pure`` is used. Set GPSTACK_BACKEND=pure (or
=compiled) to force one side; forcing "compiled" raises if the
extension is missing so a misconfigured deployment fails loudly.
"""

import os

from . import pure

_forced = os.environ.get("GPSTACK_BACKEND", "").strip().lower()

if _forced == "pure":
    _impl = pure
elif _forced == "compiled":
    from . import _core as _impl
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = pure

NAME = _impl.NAME

pairwise_sqdist = _impl.pairwise_sqdist
pairwise_dist = _impl.pairwise_dist
se_gram = _impl.se_gram
periodic_gram = _impl.periodic_gram
