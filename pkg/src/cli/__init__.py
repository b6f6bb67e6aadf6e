"""
CLI package for the hadamard tool.
"""

__version__ = "0.1.0"
