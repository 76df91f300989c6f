"""reachcast: forecast-augmented reaching assessment toolkit."""

__version__ = "0.1.0"
