# setup.py - packaging for ProSwap
from pathlib import Path

from setuptools import setup

here = Path(__file__).parent

setup(
    name="proswap",
    version="0.1.0",
    description="Probabilistic atomic swaps with adaptor signatures on a simulated ledger",
    long_description=(here / "README.md").read_text(encoding="utf-8"),
    long_description_content_type="text/markdown",
    python_requires=">=3.8",
    py_modules=[
        "adaptor",
        "algebra",
        "cli",
        "config",
        "encryption",
        "errors",
        "experiments",
        "ideal",
        "ledger",
        "oprf",
        "proofs",
        "swap",
        "twoparty",
    ],
    install_requires=[
        "ecdsa>=0.18.0",
        "numpy>=1.24.0",
        "rich>=13.7.0",
        "click>=8.1.7",
        "python-dotenv>=1.0.0",
    ],
    extras_require={
        "dev": ["pytest>=7.4.3", "pytest-cov>=4.1.0", "hypothesis>=6.90.0"],
    },
    entry_points={"console_scripts": ["proswap=cli:main"]},
)
