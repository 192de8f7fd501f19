"""Pick the program interpreter at import time.

The compiled ``_vm_ext`` is used when it was built; set
``LAGRANGEKIT_BACKEND=python`` to force the pure-Python interpreter.
"""

import os

from lagrangekit import _vm_py

python_impl = _vm_py

try:
    if os.environ.get("LAGRANGEKIT_BACKEND", "").lower() == "python":
        raise ImportError("pure-Python backend requested")
    from lagrangekit import _vm_ext as compiled_impl
except ImportError:
    compiled_impl = None

impl = compiled_impl if compiled_impl is not None else python_impl
NAME = "cython" if impl is compiled_impl else "python"
