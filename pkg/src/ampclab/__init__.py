"""Laboratory for round complexity in adaptive massively parallel computation."""

__version__ = "0.1.0"
