"""Build the optional compiled string-metric kernels.

The package works without the extension (soundlaw.kernels falls back to
the pure-Python implementations) but the compiled kernels are required to
hit the documented runtimes on large corpora.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("soundlaw._speedups", ["src/soundlaw/_speedups.pyx"])],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
        },
    )

setup(ext_modules=ext_modules)
