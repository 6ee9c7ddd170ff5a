"""Polygonal virtual element solver for linear elasticity."""
