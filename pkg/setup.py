"""Build script for the optional MPFR trace kernel.

The package works without the extension (the pure-Python gmpy2 kernel is
selected at import); the extension is skipped when Cython or the MPFR
headers are unavailable.
"""
import os
import sys

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("STURMBAND_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        sys.stderr.write("Cython not found; building without the compiled kernel\n")
    else:
        ext = Extension(
            "sturmband._kernel",
            ["src/sturmband/_kernel.pyx"],
            libraries=["mpfr", "gmp"],
            extra_compile_args=["-O2"],
            optional=True,
        )
        ext_modules = cythonize(
            [ext],
            compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
        )

setup(ext_modules=ext_modules)
