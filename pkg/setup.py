"""Build script: compiles the Cython KDE core when a toolchain is present.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed extension build degrades to a pure-Python install
instead of aborting.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "divkde._kdecore",
                ["src/divkde/_kdecore.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
