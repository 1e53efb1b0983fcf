"""Build script for the optional compiled path-simulation core.

The extension is a plain-C Cython module (no numpy headers).  If Cython or a
C compiler is unavailable the build degrades to the pure-python backend that
ships in ``peacock2._pathsim_py``; everything still works, just slower.

-ffp-contract=off keeps the compiled kernels bit-identical to the vectorized
numpy fallback (no FMA contraction), which the backend parity tests rely on.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - depends on toolchain
            print(f"warning: compiled backend skipped ({exc}); "
                  "falling back to the pure-python kernels")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            print(f"warning: building {ext.name} failed ({exc}); "
                  "falling back to the pure-python kernels")


def extensions():
    import os
    if not os.path.exists("src/peacock2/_pathsim.pyx"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:  # pragma: no cover
        return []
    ext = Extension(
        "peacock2._pathsim",
        ["src/peacock2/_pathsim.pyx"],
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
