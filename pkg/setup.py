import os
import re

from setuptools import find_packages, setup

long_description = ""
if os.path.exists("README.md"):
    with open("README.md") as f:
        long_description = f.read()

with open(os.path.join("torsion_landscape", "__init__.py")) as f:
    version = re.search(r'__version__ = "([^"]+)"', f.read()).group(1)

setup(
    name="torsion-landscape",
    version=version,
    description="Explicit multi-peak torsion domains: construction, certificates and finite difference cross-validation",
    license="MIT",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(include=["torsion_landscape", "torsion_landscape.*"]),
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.21",
        "scipy>=1.12",  # rtol keyword of the Krylov solvers
        "dask[array,distributed]>=2021.11.1",
        "pandas>=1.5.0",
        "matplotlib>=3.5",
        "Pillow>=8.0",
        "fastapi>=0.61.1",
        "pydantic>=2",
        "uvicorn>=0.11.3",
        "tabulate",
        "nest-asyncio",
    ],
    extras_require={
        "dev": [
            "pytest>=6.0.1",
            "pytest-cov>=2.10.1",
            "requests",
            "httpx",
            "sphinx>=3.2.1",
            "pre-commit",
            "black==22.3.0",
            "isort==5.7.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "torsion-landscape-server = torsion_landscape.server.app:main",
            "torsion-landscape = torsion_landscape.cmd:main",
        ]
    },
    zip_safe=False,
    command_options={"build_sphinx": {"source_dir": ("setup.py", "docs"),}},
)
