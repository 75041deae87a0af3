"""Build script for the optional compiled kernels.

The package works without the extension (a pure numpy/heapq fallback is
selected at import time); building it just makes the pairwise-distance and
shortest-path kernels much faster.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "radiochart.kernels._ckernels",
                ["src/radiochart/kernels/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
