"""
projave: projection-averaged Sobolev functionals and their convex-geometry substrate.
"""
__version__ = '0.1.0'
