"""Wildfire susceptibility mapping: raster features, spatially aware sampling, classifiers and risk maps."""

__version__ = "0.1.0"
