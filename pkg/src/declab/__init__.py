"""Decision-estimation coefficient toolkit for finite model classes."""

__version__ = "0.1.0"
