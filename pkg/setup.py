import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

# -ffp-contract=off: the pure-python backend must reproduce kernel results
# bit for bit, so FMA contraction is disabled.
extensions = [
    Extension(
        "ifsdrift._kernels",
        ["src/ifsdrift/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
