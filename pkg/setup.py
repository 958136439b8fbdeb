from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="subshift-tiling-compiler",
    version="1.0.1",
    author="Subshift Tiling Compiler Team",
    description="Compile effectively closed 1D subshifts into 2D hierarchical local rules",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "examples"]),
    py_modules=["app"],
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.11",
    install_requires=[
        "numpy>=1.26.0",
        "Pillow>=10.0.0",
        "reportlab>=4.0.0",
        "python-dotenv>=1.0.0",
    ],
    extras_require={
        "sat": ["pycosat>=0.6.6"],
        "dev": [
            "pytest>=7.4.0",
            "pytest-cov>=4.1.0",
            "black>=23.0.0",
            "flake8>=6.0.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "tiling-compiler=app:main",
        ],
    },
)
