"""Builds the optional compiled kernel core.

The package works without it (a numpy fallback is selected at import time),
so a missing compiler or Cython only costs speed, never correctness.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "spice.kernels._native",
                ["src/spice/kernels/_native.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    print(f"spice: skipping compiled kernels ({exc}); numpy fallback will be used")

setup(ext_modules=ext_modules)
