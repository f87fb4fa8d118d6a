"""catlab: numerical experiments on a one-parameter family of piecewise affine torus maps with holes."""

__version__ = "0.1.0"
