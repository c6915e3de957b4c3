"""Build script.

The compiled kernel extension is optional: if Cython or a C compiler is
unavailable (or CVXADP_NO_EXT=1 is set), the package installs without it and
falls back to the pure numpy kernels at import time.
"""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """build_ext that degrades to a warning instead of failing the install."""

    def run(self):
        try:
            build_ext.run(self)
        except Exception as exc:  # compiler missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            build_ext.build_extension(self, ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        sys.stderr.write(
            "WARNING: building the cvxadp._speedups extension failed (%s); "
            "the pure-Python kernels will be used instead.\n" % (exc,)
        )


def extensions():
    if os.environ.get("CVXADP_NO_EXT") == "1":
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        sys.stderr.write("WARNING: %s; skipping compiled kernels.\n" % (exc,))
        return []
    exts = [
        Extension(
            "cvxadp.kernels._speedups",
            sources=["src/cvxadp/kernels/_speedups.pyx"],
            include_dirs=[numpy.get_include()],
            extra_compile_args=["-O3"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
    ]
    return cythonize(exts, compiler_directives={"language_level": "3"})


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
