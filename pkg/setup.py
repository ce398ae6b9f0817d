from setuptools import Extension, setup

# The compiled kernel is an optional speedup; the package falls back to the
# pure-Python implementation in obsim._kernels.pykern when it is absent.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "obsim._kernels.fastkern",
                ["src/obsim/_kernels/fastkern.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
