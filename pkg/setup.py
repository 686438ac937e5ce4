"""Setup configuration for BlindSignedID CLI"""

from setuptools import setup, find_packages
from pathlib import Path

# Read the README file
this_directory = Path(__file__).parent
long_description = (this_directory / "README.md").read_text(encoding='utf-8') if (this_directory / "README.md").exists() else ""

# Read requirements
with open('requirements.txt') as f:
    requirements = f.read().splitlines()

setup(
    name="blindsignedid-cli",
    version="1.0.0",
    author="Your Name",
    author_email="your.email@example.com",
    description="BlindSignedID contact-tracing protocol toolkit and DoS simulation CLI",
    long_description=long_description,
    long_description_content_type="text/markdown",
    url="https://github.com/yourusername/blindsignedid-cli",
    package_dir={"": "src"},
    packages=find_packages(where="src"),
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Developers",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Security :: Cryptography",
        "Topic :: System :: Networking",
    ],
    python_requires=">=3.10",
    install_requires=requirements,
    extras_require={"test": ["pytest>=7.0.0"]},
    entry_points={
        "console_scripts": [
            "bsid=bsid_cli.cli:cli",  # Main short command
            "blindsignedid=bsid_cli.cli:cli",
        ],
    },
    include_package_data=True,
    zip_safe=False,
)
