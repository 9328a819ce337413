#!/usr/bin/env python
"""Setup script for the toporeuse distribution."""

from setuptools import find_namespace_packages, setup

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="toporeuse",
    version="0.1.0",
    author="toporeuse Contributors",
    description="One-stage lane topology reasoning with attention reuse and SD-map distillation",
    long_description=long_description,
    long_description_content_type="text/markdown",
    license="MIT",
    packages=find_namespace_packages(include=["core*", "config*", "modules*", "engine*", "reports*", "cli*"]),
    package_data={"config": ["*.yml"], "reports": ["templates/*.j2"]},
    python_requires=">=3.10",
    install_requires=[
        "numpy>=1.26",
        "scipy>=1.11",
        "pydantic>=2.5",
        "typer==0.12.3",
        "rich==13.7.0",
        "pyfiglet==1.0.2",
        "pyyaml==6.0.1",
        "python-dotenv==1.0.0",
        "Jinja2==3.1.2",
    ],
    extras_require={
        "dev": [
            "pytest==8.0.0",
            "pytest-asyncio==0.23.2",
            "pytest-cov==4.1.0",
            "black==24.1.1",
            "isort==5.13.2",
            "flake8==6.1.0",
            "mypy==1.8.0",
            "pre-commit==3.0.0",
        ]
    },
    entry_points={
        "console_scripts": [
            "toporeuse=cli.main:app",
        ]
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
    keywords="lane topology autonomous-driving transformer distillation",
)
