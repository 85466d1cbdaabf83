import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("QUADTHERM_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("quadtherm._kernels", ["src/quadtherm/_kernels.pyx"], extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
