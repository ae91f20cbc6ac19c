"""Build script for the optional compiled co-occurrence kernel.

The package works without the extension: ``mremix._kernels`` falls back to
a pure-Python kernel at import time when the compiled module is missing.
Set MREMIX_NO_EXT=1 to skip the extension build entirely.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Try to build the kernel; on failure warn and continue pure-Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, broken toolchain, ...
            self._skip(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._skip(exc)

    @staticmethod
    def _skip(exc):
        print(f"WARNING: compiled kernel unavailable ({exc}); "
              "the pure-Python kernel will be used instead")


def extensions():
    if os.environ.get("MREMIX_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("WARNING: Cython not installed; building without compiled kernels")
        return []
    ext = Extension(
        "mremix._kernels._cooc",
        ["src/mremix/_kernels/_cooc.pyx"],
        language="c++",
        extra_compile_args=["-O3", "-std=c++11"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
