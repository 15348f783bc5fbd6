"""Sum-decomposition of permutation-invariant set functions."""

__version__ = "0.1.0"
