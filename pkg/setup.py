"""Build the optional Cython kernels.

The package works without them: ``llm_ift.kernels`` falls back to the
pure-Python implementation when the extension is missing.
"""
import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: skipping Cython kernels ({exc})", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name} ({exc})", file=sys.stderr)


def ext_modules():
    if os.environ.get("LLM_IFT_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "llm_ift._kernels",
        ["src/llm_ift/_kernels.pyx"],
        extra_compile_args=["-O3"] if os.name != "nt" else ["/O2"],
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=ext_modules(), cmdclass={"build_ext": optional_build_ext})
