"""Build script with an optional compiled kernel extension.

The package is pure Python plus numpy.  If Cython and a C compiler are
available, the hot kernels (counter-based RNG block function and the
coincidence pair histogram) are additionally built as a C extension.
When the extension is absent the package falls back to numpy
implementations of the same kernels at import time, so a failed
extension build never breaks the install.

    python setup.py build_ext --inplace    # enable the compiled backend
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "photondiode._kernels._core",
                ["src/photondiode/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
