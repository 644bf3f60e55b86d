"""Build script for the optional compiled kernel extension.

The package installs and runs without the extension (a pure numpy fallback
is selected at import time); building it just makes the adversary optimizer
and the eigensolver kernels much faster.
"""
from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/detqkd/_kernels/_core.pyx"],
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
