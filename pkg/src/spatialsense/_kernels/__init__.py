"""Hot quantized kernels with backend selection at import.

The compiled extension is preferred when present; the numpy fallback is
selected otherwise, or when SENSE_PURE_PYTHON is set to a non-zero value.
Both expose the same functions with bit-identical results.
"""

import os

from . import _pyref

if os.environ.get("SENSE_PURE_PYTHON", "0") not in ("", "0"):
    _impl = _pyref
    BACKEND = "python"
else:
    try:
        from . import _quantized as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _pyref
        BACKEND = "python"

acf_quantized = _impl.acf_quantized
msg_quantized = _impl.msg_quantized

__all__ = ["BACKEND", "acf_quantized", "msg_quantized"]
