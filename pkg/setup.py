"""Build script for the optional compiled kernel extension.

The package works without the extension (a pure-numpy implementation of the
same kernels is selected at import time), so any failure to compile is
non-fatal: we simply ship no extension modules in that case.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "fermichain._kernels_cy",
                ["src/fermichain/_kernels_cy.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"fermichain: skipping compiled kernels ({exc}); pure-python fallback will be used")

setup(ext_modules=ext_modules)
