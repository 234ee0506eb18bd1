import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("VOLCOPULA_NO_EXT", "0") != "1":
    from Cython.Build import cythonize

    ext = Extension(
        "volcopula._pathcore",
        ["src/volcopula/_pathcore.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
    )
    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
