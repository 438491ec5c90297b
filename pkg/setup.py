import os

from setuptools import Extension, setup

# The compiled kernels are an optimization, not a requirement: if Cython or a
# C compiler is unavailable the package installs anyway and falls back to the
# pure-Python implementations (see acrlab._backend).
ext_modules = []
if os.environ.get("ACRLAB_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "acrlab._core",
                    ["src/acrlab/_core.pyx"],
                    # -ffp-contract=off keeps float arithmetic bit-identical
                    # with the pure-Python fallback (no FMA contraction).
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
