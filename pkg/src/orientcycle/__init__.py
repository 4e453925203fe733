"""Oriented Hamilton cycles in random digraphs: samplers, exact oracle and embedding pipeline."""

__version__ = "0.1.0"
