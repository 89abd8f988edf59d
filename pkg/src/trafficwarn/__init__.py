"""Video-based traffic parameter extraction and congestion early warning."""

__version__ = "0.1.0"
