"""Unsupervised defect detection on periodic textures."""

__version__ = "0.1.0"
