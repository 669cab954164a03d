#!/usr/bin/env python
from setuptools import setup, find_packages

version = {}
with open("src/areapo/_version.py") as f:
    exec(f.read(), version)

setup(
    name="areapo",
    packages=find_packages("src"),
    package_dir={"": "src"},
    package_data={"areapo": ["data/*.yaml", "data/fixtures/*.mdp"]},
    version=version["__version__"],
    install_requires=[
        "dask",
        "matplotlib",
        "netcdf4",
        "numpy",
        "pandas",
        "pyyaml",
        "scipy",
        "tqdm",
        "typing_extensions",
        "xarray",
    ],
    entry_points={"console_scripts": ["areapo = areapo.cli:main"]},
)
