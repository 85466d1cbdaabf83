"""Select the compiled kernels when available, else the numpy fallback.

Set ``QUADTHERM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

kernels = _pykernels
if os.environ.get("QUADTHERM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as kernels  # noqa: F811
    except ImportError:
        kernels = _pykernels

BACKEND = kernels.NAME


def available():
    """Names of every importable kernel backend."""
    names = {_pykernels.NAME: _pykernels}
    try:
        from . import _kernels

        names[_kernels.NAME] = _kernels
    except ImportError:
        pass
    return names
