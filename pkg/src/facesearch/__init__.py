"""Face-space search: eigenfaces, Gaussian coordinate models, and
skew-normal adaptive search driven by a human or simulated oracle."""

from . import eigenspace, faceio, gaussmodel, search, skewnormal, synthetic

__all__ = [
    "eigenspace",
    "faceio",
    "gaussmodel",
    "search",
    "skewnormal",
    "synthetic",
]

__version__ = "0.1.0"
