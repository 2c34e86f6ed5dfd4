"""Simplicial resolutions and comonadic homology over Z/m."""
