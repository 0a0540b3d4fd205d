import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SHARDCALC_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "shardcalc._kernel",
                    ["src/shardcalc/_kernel.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # no Cython: the pure backend is selected at import time
        ext_modules = []

setup(ext_modules=ext_modules)
