import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "alphasurvey._collision",
        ["src/alphasurvey/_collision.pyx"],
        include_dirs=[np.get_include()],
        # -ffp-contract=off keeps results bit-identical to the numpy fallback
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
