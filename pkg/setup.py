from setuptools import setup, Extension

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("triplegak._dpcore", ["src/triplegak/_dpcore.pyx"])],
        language_level=3,
    )
except ImportError:
    # The package falls back to the pure-Python DP at import time.
    ext_modules = []

setup(ext_modules=ext_modules)
