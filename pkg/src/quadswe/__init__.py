"""Adaptive quadtree central-upwind solver for the shallow water equations."""

__version__ = "0.1.0"
