"""Corpus passport: statistical profiles of short social-media text collections."""

__version__ = "0.1.0"
