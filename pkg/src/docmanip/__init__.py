"""Document-scale text content manipulation on structured records."""
__version__ = "0.1.0"
