"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure-Python backend is selected at
import time), so a failed compile only costs speed, not functionality.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/anomscan/_kernels/_fast.pyx",
        language_level=3,
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
