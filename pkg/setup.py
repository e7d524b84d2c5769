import os

import numpy as np
from setuptools import Extension, setup

try:
    if not os.path.exists("src/infantsim/physics/kernels/_core.pyx"):
        raise ImportError("kernel sources not present")
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "infantsim.physics.kernels._core",
                ["src/infantsim/physics/kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    # Pure-Python kernels are selected at import when the extension is absent.
    extensions = []

setup(ext_modules=extensions)
