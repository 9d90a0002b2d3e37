import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("GRAVIDEC_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
        import numpy
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "gravidec._kernels._ckernels",
                    ["src/gravidec/_kernels/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )

setup(ext_modules=ext_modules)
