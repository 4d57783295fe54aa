"""Behavioral fingerprinting of web-browsing agents from UI event traces."""

__version__ = "0.1.0"
