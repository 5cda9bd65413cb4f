"""Build script for the optional compiled kernel.

The package works without the extension (a numpy fallback is selected at
import time); building it just makes the quantized fixed-point kernels much
faster.  -ffp-contract=off keeps the C arithmetic bit-identical to the
fallback by forbidding FMA contraction.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "spatialsense._kernels._quantized",
                ["src/spatialsense/_kernels/_quantized.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
