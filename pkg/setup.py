"""Build script for the optional compiled kernels."""
import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # the numpy fallback still works without the extension
    cythonize = None

omp = [] if os.environ.get("CARNOT_NO_OPENMP") else ["-fopenmp"]
ext_modules = []
if cythonize is not None:
    ext = Extension(
        "carnot_nonlocal._kernels",
        ["src/carnot_nonlocal/_kernels.pyx"],
        extra_compile_args=["-O3"] + omp,
        extra_link_args=omp,
        optional=True,
    )
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
