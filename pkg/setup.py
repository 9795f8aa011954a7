"""Build script for the compiled kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), but the Cython kernels are considerably faster for the
stencil and patch loops inside the iterative solvers.
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "frameforge._kernels._ckernels",
        sources=["src/frameforge/_kernels/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    ),
]

setup(ext_modules=cythonize(extensions, language_level=3))
