"""Direction-of-arrival estimation for multi-band sub-Nyquist antenna front-ends.

Subpackages by stage: ``frontend`` (scene synthesis and digitization),
``coarray`` (sparse-array pre-processing), ``music`` (subspace estimation),
``linalg`` (hand-rolled QR/eigensolver), ``fixedpoint`` (word-length modes),
``experiments`` (error sweeps and presets), ``cli`` (the ``sense`` command).
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND

__all__ = ["__version__", "KERNEL_BACKEND"]
