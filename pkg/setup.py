"""Build script: compiles the optional Cython kernel extension.

The extension is a pure speedup; if the toolchain or Cython is missing the
package installs anyway and falls back to the pure-Python kernels at import.
"""

import os
import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, otherwise warn and continue."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # toolchain missing
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # compile failure
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        sys.stderr.write(
            "warning: building the compiled kernels failed (%s); "
            "falling back to the pure-Python kernels\n" % (exc,)
        )


def extensions():
    if os.environ.get("TORUSLIN_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        sys.stderr.write("warning: Cython not available, skipping compiled kernels\n")
        return []
    import numpy

    from setuptools import Extension

    ext = Extension(
        "toruslin._kernels.ckernels",
        sources=["src/toruslin/_kernels/ckernels.pyx"],
        include_dirs=[numpy.get_include()],
        language="c++",
        extra_compile_args=["-O3", "-std=c++17"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
