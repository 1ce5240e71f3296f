"""Build hook for the optional compiled kernel.

If Cython or a C compiler is missing the package still installs and falls back
to the numpy kernel at import.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy  # noqa: F401
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("memxbar._kernel", ["src/memxbar/_kernel.pyx"], extra_compile_args=["-O3"])],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
