from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off keeps float arithmetic identical to the pure-Python
# engine (no fused multiply-add), which the backend equivalence tests rely on.
extensions = [
    Extension(
        "satsched._core",
        ["src/satsched/_core.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
