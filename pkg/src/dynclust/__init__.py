"""Streaming graph clustering: sparsifier + contracted sketch + query pipeline."""

from .graph import DynamicGraph, Partition, conductance, cut_weight, volume

__all__ = [
    "DynamicGraph",
    "Partition",
    "conductance",
    "cut_weight",
    "volume",
]

__version__ = "0.1.0"
