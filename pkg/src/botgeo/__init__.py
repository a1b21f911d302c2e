"""botgeo: offline profile geolocation, bot labeling, and country/language bot metrics."""

__version__ = "0.1.0"
