"""Metric Diophantine approximation workbench for systems of small linear forms."""

__version__ = "0.1.0"
ENGINE_VERSION = f"smallforms-{__version__}"
