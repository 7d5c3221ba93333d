import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; traffic.py falls back to _pqcore_py
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "routebench._pqcore",
                sources=["src/routebench/_pqcore.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
