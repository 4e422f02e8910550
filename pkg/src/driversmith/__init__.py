"""Coverage-guided generation, sanitization, and fusion of C fuzz drivers."""

__version__ = "0.1.0"
