"""Top-level package for fastreact."""

__author__ = """Micah Johnson"""
__version__ = '0.1.0'
