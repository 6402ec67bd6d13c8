"""Build script: compiles the optional Cython kernel extension.

The package is fully functional without the extension (a pure-Python/numpy
fallback is selected at import); compilation failures are therefore demoted
to a warning instead of aborting the install.
"""

import warnings

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "revdyn._speedups",
                ["src/revdyn/_speedups.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    warnings.warn(f"building without compiled kernels ({exc!r})")

setup(ext_modules=ext_modules)
