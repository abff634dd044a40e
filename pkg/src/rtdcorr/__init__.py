"""Delay-distance correlation analysis and rich-subnetwork-aware IP geolocation."""

__version__ = "0.1.0"
