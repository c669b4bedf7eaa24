"""Gaze-seeded object segmentation for image sequences and volumes.

Pipeline: per-frame superpixels -> gaze-seeded probability propagation ->
gradient boosting under an expected exponential loss -> per-pixel
probability maps. See the README for the CLI and file formats.
"""

__version__ = "0.1.0"

from .kernels import BACKEND as kernel_backend  # noqa: F401
