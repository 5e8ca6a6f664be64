"""Mixed finite elements for strain gradient elasticity on the unit square."""

__version__ = "0.1.0"
