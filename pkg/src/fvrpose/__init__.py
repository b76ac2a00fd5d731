"""Rotation representations, FVR, pose metrics and box-cage augmentation."""

__version__ = "0.1.0"
