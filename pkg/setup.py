"""Build script: compiles the optional fast kernels when Cython is available.

The package is fully functional without the extension; `coalint._backend`
falls back to the pure-numpy kernels at import time.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/coalint/_kernels.pyx",
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
