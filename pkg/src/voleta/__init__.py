"""Deterministic core of a food-volume estimation pipeline.

Keyframe curation, mesh cleanup and volume, metric scale recovery from a
reference object and depth, and volume/shape evaluation. Neural
reconstruction and segmentation are upstream producers of the mesh and
mask files consumed here.
"""
from . import evalreg, frames, meshkit, metrology, pipeline, sceneio
from .errors import (
    EmptySceneError,
    IllConditionedError,
    ImageFormatError,
    IntegrityError,
    InvalidInputError,
    MeshParseError,
    VoletaError,
)

__version__ = "0.1.0"

__all__ = [
    "evalreg", "frames", "meshkit", "metrology", "pipeline", "sceneio",
    "EmptySceneError", "IllConditionedError", "ImageFormatError", "IntegrityError",
    "InvalidInputError", "MeshParseError", "VoletaError",
]
