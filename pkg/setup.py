import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off keeps the compiled kernels bit-compatible with the
# numpy fallback (no FMA contraction of a*b+c).
extensions = [
    Extension(
        "aperiod_sde._kernels._speedups",
        ["src/aperiod_sde/_kernels/_speedups.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
