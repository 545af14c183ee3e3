"""Build script: compiles the evidential mass kernel when Cython is available.

The package works without the compiled extension; uplan._core falls back to
the pure-Python kernel at import time.
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
                "uplan._core._masskernel",
                ["src/uplan/_core/_masskernel.pyx"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
