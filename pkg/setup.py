import os

import numpy as np
from setuptools import setup, Extension

ext_modules = []
if not os.environ.get("ROUGHPRICER_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext = Extension(
            "roughpricer._kernel",
            ["src/roughpricer/_kernel.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
        )
        ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
