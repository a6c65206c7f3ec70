import os
import sys

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# The kernel is a Newton sweep over whole arrays; -ffast-math lets gcc
# vectorize exp/log through glibc's libmvec.  CRPLAP_NATIVE=1 adds
# -march=native (AVX2/AVX-512 variants, not portable to other CPUs).
compile_args = ["-O3", "-ffast-math"]
link_args = []
if sys.platform.startswith("linux"):
    link_args.append("-lmvec")
if os.environ.get("CRPLAP_NATIVE", "") not in ("", "0"):
    compile_args.append("-march=native")

extensions = [
    Extension(
        "crplap._kernels",
        ["src/crplap/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=compile_args,
        extra_link_args=link_args,
        optional=True,  # the NumPy fallback is used if this fails to build
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
