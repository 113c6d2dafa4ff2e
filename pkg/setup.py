"""Build the optional compiled kernel core.

The extension is skipped (and the pure-Python kernels are used at import
time) when Cython or a C compiler is unavailable, or when
ESTERR_NO_EXTENSION is set.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("ESTERR_NO_EXTENSION"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "esterr._ckernels",
                    ["src/esterr/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
