__all__ = ["app"]
__version__ = "0.1.0"
