import numpy as np
from setuptools import Extension, setup

# The compiled kernels are optional: the package falls back to the pure
# numpy implementations in tumorbayes.kernels._numpy when the extension
# is missing (e.g. no C compiler on the host).
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "tumorbayes.kernels._core",
                ["src/tumorbayes/kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": 3},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
