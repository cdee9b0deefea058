import os

import numpy as np
from setuptools import Extension, setup


def get_extensions():
    if os.environ.get("PERFLAB_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    extensions = [
        Extension(
            "perflab._speedups",
            ["src/perflab/_speedups.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
        )
    ]
    return cythonize(extensions, compiler_directives={"language_level": "3"})


setup(ext_modules=get_extensions())
