from setuptools import Extension, setup
from Cython.Build import cythonize

# Compiled hot kernels (tree split scans, exposure accumulation).  The
# package falls back to the numpy implementations in hazboost._kernels._pure
# if this extension is missing, so a failed build is not fatal for users.
extensions = [
    Extension(
        "hazboost._kernels._core",
        sources=["src/hazboost/_kernels/_core.pyx"],
        extra_compile_args=["-O3"],
    )
]

setup(ext_modules=cythonize(extensions, language_level="3"))
