"""Spectral analysis and learned augmentation for graph contrastive learning."""

__version__ = "0.1.0"
