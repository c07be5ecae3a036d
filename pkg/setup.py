"""Build script for the optional Cython kernels.

The package works without the extension: ``qsembed.kernels`` falls back to
the numpy implementation in ``_kernels_py`` when the compiled module is
missing.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("QSEMBED_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "qsembed._kernels",
                    ["src/qsembed/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
