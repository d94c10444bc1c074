"""Next-best-view planning with point-density scene representations."""

__version__ = "0.1.0"
