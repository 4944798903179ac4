"""Select the Hankel kernel implementation at import time.

Set ``TPSTOKES_BACKEND=python`` to force the numpy fallback.
"""
import os

from . import _hankel_py

BACKEND = "python"
hankel01 = _hankel_py.hankel01

if os.environ.get("TPSTOKES_BACKEND", "").lower() != "python":
    try:
        from ._hankel_ext import hankel01  # noqa: F811
        BACKEND = "compiled"
    except ImportError:
        pass


def available_backends():
    """Map backend name to its ``hankel01`` callable."""
    out = {"python": _hankel_py.hankel01}
    try:
        from ._hankel_ext import hankel01 as ext
        out["compiled"] = ext
    except ImportError:
        pass
    return out
