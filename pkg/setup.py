from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

with open("requirements.txt", "r", encoding="utf-8") as f:
    requirements = [line.strip() for line in f if line.strip() and not line.startswith("#")]

setup(
    name="paired-comparison-ranking",
    version="0.1.0",
    author="Paired Comparison Team",
    author_email="example@example.com",
    description="Bayesian ranking of objects from paired-comparison counts with t-distribution models",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    py_modules=["main"],
    package_data={"paired_comparison.data": ["journals.csv"]},
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.9",
    install_requires=requirements,
    extras_require={"test": ["pytest>=7.4.0"]},
    entry_points={
        "console_scripts": [
            "paired-comparison=main:main",
        ],
    },
)
