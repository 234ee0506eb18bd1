"""Select the compiled path kernel when available, else the Python fallback.

``VOLCOPULA_FORCE_PYTHON=1`` forces the fallback (used by tests and the
kernel benchmark).
"""

import os

if os.environ.get("VOLCOPULA_FORCE_PYTHON", "0") == "1":
    from . import _pathcore_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _pathcore as _impl

        BACKEND = "compiled"
    except ImportError:
        from . import _pathcore_py as _impl

        BACKEND = "python"

ou_mh_path = _impl.ou_mh_path
