"""Swirl-free axisymmetric MHD-Boussinesq solver on a cylindrical (r, z) grid."""

__version__ = "0.1.0"
