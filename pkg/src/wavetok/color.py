"""RGB <-> YCbCr conversion and 2x2 chroma resampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image_io import RgbImage

# BT.601 full range, zero-centred chroma
RGB_TO_YCBCR = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ],
    dtype=np.float64,
)
YCBCR_TO_RGB = np.linalg.inv(RGB_TO_YCBCR)


@dataclass
class YcbcrPlanes:
    """Full-resolution luminance plus half-resolution chroma planes."""

    y: np.ndarray
    cb: np.ndarray
    cr: np.ndarray

    def __post_init__(self):
        n = self.y.shape[0]
        if self.y.shape != (n, n):
            raise ValueError(f"luminance plane must be square, got {self.y.shape}")
        if n % 2:
            raise ValueError(f"resolution must be even, got {n}")
        half = (n // 2, n // 2)
        if self.cb.shape != half or self.cr.shape != half:
            raise ValueError(
                f"chroma planes must be {half}, got {self.cb.shape} and {self.cr.shape}"
            )

    @property
    def n(self) -> int:
        return self.y.shape[0]


def rgb_to_ycbcr(img: RgbImage) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pixel ``[Y, Cb, Cr] = M @ [R, G, B]`` at full resolution."""
    out = img.data @ RGB_TO_YCBCR.T.astype(np.float32)
    return out[..., 0], out[..., 1], out[..., 2]


def ycbcr_to_rgb(y, cb, cr) -> RgbImage:
    """Inverse colour transform followed by a clamp to [0, 1]."""
    y, cb, cr = (np.asarray(p, dtype=np.float32) for p in (y, cb, cr))
    if not (y.shape == cb.shape == cr.shape):
        raise ValueError(f"plane shapes differ: {y.shape}, {cb.shape}, {cr.shape}")
    stacked = np.stack([y, cb, cr], axis=-1)
    rgb = stacked @ YCBCR_TO_RGB.T.astype(np.float32)
    return RgbImage(np.clip(rgb, 0.0, 1.0))


def downsample_chroma(plane) -> np.ndarray:
    """Mean of every 2x2 block."""
    plane = np.asarray(plane, dtype=np.float32)
    h, w = plane.shape
    if h % 2 or w % 2:
        raise ValueError(f"chroma downsampling needs even dimensions, got {plane.shape}")
    return plane.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3), dtype=np.float32)


def upsample_chroma(plane) -> np.ndarray:
    """Nearest-neighbour replication into 2x2 blocks."""
    plane = np.asarray(plane, dtype=np.float32)
    return np.repeat(np.repeat(plane, 2, axis=0), 2, axis=1)


def to_planes(img: RgbImage) -> YcbcrPlanes:
    if img.height != img.width:
        raise ValueError(f"image must be square, got {img.height}x{img.width}")
    y, cb, cr = rgb_to_ycbcr(img)
    return YcbcrPlanes(y, downsample_chroma(cb), downsample_chroma(cr))


def from_planes(planes: YcbcrPlanes) -> RgbImage:
    return ycbcr_to_rgb(planes.y, upsample_chroma(planes.cb), upsample_chroma(planes.cr))
