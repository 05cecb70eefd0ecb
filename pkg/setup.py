"""Build script for the compiled stepping kernel.

The extension is optional: if Cython (or a C compiler) is unavailable the
package installs anyway and `kppw.pde` falls back to the pure-NumPy kernel
in `kppw._stepper_py`.
"""

from setuptools import setup, Extension

try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "kppw._stepper",
                sources=["src/kppw/_stepper.pyx"],
                include_dirs=[np.get_include()],
                # -ffp-contract=off keeps the kernel bit-identical to the
                # NumPy fallback (no fused multiply-add).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
            "language_level": "3",
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
