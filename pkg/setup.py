"""
Setup script for koopman-distill
Only needed for editable installs on older pip versions
Modern pip uses pyproject.toml directly
"""

from setuptools import setup

# Configuration is in pyproject.toml
setup()
