"""Symmetry analysis toolkit for the fine Kolmogorov backward equation u_t + x u_y = x^2 u_xx."""

__version__ = "0.1.0"
