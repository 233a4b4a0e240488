"""Builds the optional compiled kernel extension.

The package works without a compiler: if Cython or a C toolchain is
missing the extension is skipped and the numpy fallbacks in
craniofit.kernels are used instead.
"""

import os
import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    from setuptools import Extension

    # -ffp-contract=off: the fallback and native kernels must produce
    # bit-identical float results, so fused multiply-add is disabled.
    extra_args = ["-O3", "-ffp-contract=off"]
    if sys.platform == "win32":
        extra_args = ["/O2", "/fp:precise"]

    ext_modules = cythonize(
        [
            Extension(
                "craniofit._fastkern",
                sources=["src/craniofit/_fastkern.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=extra_args,
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": 3,
        },
    )
except Exception as exc:  # pragma: no cover - depends on toolchain
    sys.stderr.write(f"building without compiled kernels: {exc}\n")
    ext_modules = []

setup(ext_modules=ext_modules)
