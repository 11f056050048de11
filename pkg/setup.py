"""Build script; compiles the transform kernel extension when Cython is usable.

The package works without the extension (a pure-Python twin is selected at
import time), so a failed compile downgrades to a warning instead of
aborting the install.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "scenetalk.kernels._transform_cy",
                sources=["src/scenetalk/kernels/_transform_cy.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    print(f"warning: skipping compiled kernels ({exc}); pure-Python fallback "
          "will be used", file=sys.stderr)

setup(ext_modules=ext_modules)
