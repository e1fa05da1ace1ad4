"""prismkit - exact verification kernel for Hodge-Tate crystals over p-adic fields."""

__version__ = "0.4.0"
