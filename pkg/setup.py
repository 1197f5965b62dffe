"""Build script: compiles the optional decodability-check extension when
Cython and a C compiler are available. The package works without it (a pure
Python fallback is selected at import time), so any build failure here only
costs speed, never functionality.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/polarcomp/kernels/_compiled.pyx"],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
