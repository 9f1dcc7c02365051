from setuptools import setup, find_packages

setup(
    name="sos_ggm",
    version="0.1",
    packages=find_packages(exclude=["tests"]),
    install_requires=[
        "pandas",
        "numpy",
        "sympy",
        "networkx",
        "plotly",
    ],
    extras_require={
        "test": ["pytest"],
    },
    entry_points={
        "console_scripts": [
            "sos-ggm=sos_ggm.cli:main",
        ],
    },
)
