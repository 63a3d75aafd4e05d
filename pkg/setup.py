"""Build the optional compiled kernels; the package runs without them."""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("sweepplay._kernels", ["src/sweepplay/_kernels.pyx"], include_dirs=[np.get_include()])],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules)
