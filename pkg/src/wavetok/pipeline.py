"""Multilevel analysis of YCbCr planes into the pixel-space embedding tensor.

For a level-``L`` transform of an ``N x N`` image the embedding ``W`` has
shape ``(N/2^L, N/2^L, 1.5 * 4^L)``. Its channels are grouped by level in
the order ``L, L-1, ..., 1``:

* level ``L``: the coarse Y/Cb/Cr approximations followed by the Y details of
  level ``L`` and the chroma details of level ``L-1`` (12 channels);
* level ``2 <= k < L``: Y details of level ``k`` and chroma details of level
  ``k-1`` (9 planes at ``N/2^k``), folded to the token grid;
* level 1: Y details of level 1 (3 planes at ``N/2``), folded to the grid.

Chroma enters at half resolution, so it runs one level fewer than Y and its
level-``j`` details share a group with Y level ``j+1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import color
from .image_io import RgbImage
from .wavelet import FAMILIES, Subbands, dwt2_level, idwt2_level, kernels_1d

Details = tuple[np.ndarray, np.ndarray, np.ndarray]

# channels of the level-L group holding the coarse image (never details)
APPROX_CHANNELS = 3


@dataclass(frozen=True)
class TokenizerConfig:
    family: str = "db1"
    level: int = 4
    truncation_percent: float = 0.80
    resolution: int = 256
    # threshold only detail coefficients, leaving the coarse image intact
    detail_only: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown wavelet family {self.family!r}; choose from {FAMILIES}")
        if self.level < 2:
            raise ValueError(f"level must be >= 2, got {self.level}")
        if not 0.0 <= self.truncation_percent < 1.0:
            raise ValueError(f"truncation_percent must be in [0, 1), got {self.truncation_percent}")
        n, scale = self.resolution, 2 ** self.level
        if n <= 0 or n % scale:
            raise ValueError(
                f"resolution {n} is not divisible by 2^level = {scale} (level {self.level})"
            )
        klen = len(kernels_1d(self.family)[0])
        # the coarsest Y level runs on an N/2^(L-1) plane
        if n // 2 ** (self.level - 1) < klen:
            raise ValueError(
                f"resolution {n} is too small for {self.level} levels of {self.family}"
            )

    @property
    def grid(self) -> int:
        return self.resolution // 2 ** self.level

    @property
    def tokens(self) -> int:
        return self.grid ** 2

    @property
    def channels(self) -> int:
        return sum(channel_counts(self.level))


@dataclass(frozen=True)
class Segment:
    level: int
    offset: int
    size: int

    @property
    def slice(self) -> slice:
        return slice(self.offset, self.offset + self.size)


def segments_for(sizes: list[int], level: int) -> list[Segment]:
    """Contiguous segments for per-level sizes ordered ``L, L-1, ..., 1``."""
    out, offset = [], 0
    for k, size in zip(range(level, 0, -1), sizes):
        out.append(Segment(k, offset, size))
        offset += size
    return out


@dataclass
class PixelSpaceEmbedding:
    data: np.ndarray
    segments: list[Segment]

    @property
    def grid(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def level(self) -> int:
        return self.segments[0].level

    def segment(self, k: int) -> np.ndarray:
        """Channels of level ``k``, shape ``(grid, grid, C_k)``."""
        for seg in self.segments:
            if seg.level == k:
                return self.data[:, :, seg.slice]
        raise KeyError(f"no level {k} in embedding")

    @classmethod
    def from_array(cls, data, level: int | None = None) -> "PixelSpaceEmbedding":
        """Wrap a raw ``(grid, grid, C)`` array, inferring the level from ``C``."""
        data = np.asarray(data, dtype=np.float32)
        if data.ndim != 3 or data.shape[0] != data.shape[1]:
            raise ValueError(f"embedding must have shape (grid, grid, C), got {data.shape}")
        inferred = level_for_channels(data.shape[2])
        if level is not None and level != inferred:
            raise ValueError(
                f"embedding has {data.shape[2]} channels, which is level {inferred}, not {level}"
            )
        return cls(data, segments_for(channel_counts(inferred), inferred))


@dataclass
class SubbandPyramid:
    """Details per level (index 0 = level 1) plus the coarsest approximations."""

    y_details: list[Details]
    cb_details: list[Details]
    cr_details: list[Details]
    y_approx: np.ndarray
    cb_approx: np.ndarray
    cr_approx: np.ndarray
    level: int = field(init=False)

    def __post_init__(self):
        self.level = len(self.y_details)
        if len(self.cb_details) != self.level - 1 or len(self.cr_details) != self.level - 1:
            raise ValueError("chroma pyramids must have one level fewer than luminance")


def channel_counts(level: int) -> list[int]:
    """Per-level channel counts ``C_k`` ordered ``k = L, L-1, ..., 1``."""
    if level < 2:
        raise ValueError(f"level must be >= 2, got {level}")
    mid = [9 * 4 ** (level - k) for k in range(level - 1, 1, -1)]
    return [12, *mid, 3 * 4 ** (level - 1)]


def level_for_channels(c: int) -> int:
    # C = 1.5 * 4^L
    if c % 3 == 0 and c >= 24:
        level = round(math.log(2 * c // 3, 4))
        if 3 * 4 ** level == 2 * c:
            return level
    raise ValueError(f"{c} channels is not 1.5 * 4^L for any level L >= 2")


def _check_planes(planes: color.YcbcrPlanes, cfg: TokenizerConfig):
    if planes.n != cfg.resolution:
        raise ValueError(f"planes have resolution {planes.n}, config expects {cfg.resolution}")


def _decompose(plane: np.ndarray, levels: int, fam: str) -> tuple[list[Details], np.ndarray]:
    details = []
    for _ in range(levels):
        sub = dwt2_level(plane, fam)
        details.append(sub.details)
        plane = sub.approx
    return details, plane


def _recompose(details: list[Details], approx: np.ndarray, fam: str) -> np.ndarray:
    plane = approx
    for h, v, d in reversed(details):
        plane = idwt2_level(Subbands(plane, h, v, d), fam)
    return plane


def analyze(planes: color.YcbcrPlanes, cfg: TokenizerConfig) -> SubbandPyramid:
    """Run ``L`` levels on Y and ``L-1`` levels on the half-resolution chroma."""
    _check_planes(planes, cfg)
    y_det, y_app = _decompose(planes.y, cfg.level, cfg.family)
    cb_det, cb_app = _decompose(planes.cb, cfg.level - 1, cfg.family)
    cr_det, cr_app = _decompose(planes.cr, cfg.level - 1, cfg.family)
    return SubbandPyramid(y_det, cb_det, cr_det, y_app, cb_app, cr_app)


def space_to_depth(x, factor: int) -> np.ndarray:
    """Fold each ``f x f`` block into ``f^2`` channels.

    Output channel ``c * f^2 + a * f + b`` holds input ``(i*f + a, j*f + b, c)``.
    """
    x = np.asarray(x)
    m, m2, c = x.shape
    if m % factor or m2 % factor:
        raise ValueError(f"spatial size {x.shape[:2]} is not divisible by {factor}")
    g, g2 = m // factor, m2 // factor
    return (
        x.reshape(g, factor, g2, factor, c)
        .transpose(0, 2, 4, 1, 3)
        .reshape(g, g2, c * factor * factor)
    )


def depth_to_space(x, factor: int) -> np.ndarray:
    """Inverse of :func:`space_to_depth`."""
    x = np.asarray(x)
    g, g2, cf = x.shape
    if cf % (factor * factor):
        raise ValueError(f"{cf} channels is not divisible by {factor}^2")
    c = cf // (factor * factor)
    return (
        x.reshape(g, g2, c, factor, factor)
        .transpose(0, 3, 1, 4, 2)
        .reshape(g * factor, g2 * factor, c)
    )


def _level_planes(pyr: SubbandPyramid, k: int) -> list[np.ndarray]:
    planes = list(pyr.y_details[k - 1])
    if k >= 2:
        planes += [*pyr.cb_details[k - 2], *pyr.cr_details[k - 2]]
    return planes


def gather(pyr: SubbandPyramid, cfg: TokenizerConfig) -> PixelSpaceEmbedding:
    """Pack a pyramid into the ``(grid, grid, C)`` embedding tensor."""
    if pyr.level != cfg.level:
        raise ValueError(f"pyramid has {pyr.level} levels, config expects {cfg.level}")
    groups = []
    top = [pyr.y_approx, pyr.cb_approx, pyr.cr_approx, *_level_planes(pyr, cfg.level)]
    groups.append(np.stack(top, axis=-1))
    for k in range(cfg.level - 1, 0, -1):
        stack = np.stack(_level_planes(pyr, k), axis=-1)
        groups.append(space_to_depth(stack, 2 ** (cfg.level - k)))
    data = np.concatenate(groups, axis=-1).astype(np.float32, copy=False)
    return PixelSpaceEmbedding(data, segments_for([g.shape[-1] for g in groups], cfg.level))


def scatter(w: PixelSpaceEmbedding, cfg: TokenizerConfig) -> SubbandPyramid:
    """Inverse of :func:`gather`."""
    _check_embedding(w, cfg)
    L = cfg.level
    top = w.segment(L)
    y_approx, cb_approx, cr_approx = (top[:, :, i] for i in range(APPROX_CHANNELS))
    per_level: dict[int, np.ndarray] = {L: top[:, :, APPROX_CHANNELS:]}
    for k in range(L - 1, 0, -1):
        per_level[k] = depth_to_space(w.segment(k), 2 ** (L - k))
    y_det, cb_det, cr_det = [], [], []
    for k in range(1, L + 1):
        planes = [per_level[k][:, :, i] for i in range(per_level[k].shape[-1])]
        y_det.append(tuple(planes[:3]))
        if k >= 2:
            cb_det.append(tuple(planes[3:6]))
            cr_det.append(tuple(planes[6:9]))
    return SubbandPyramid(y_det, cb_det, cr_det, y_approx, cb_approx, cr_approx)


def _check_embedding(w: PixelSpaceEmbedding, cfg: TokenizerConfig):
    expected = (cfg.grid, cfg.grid, cfg.channels)
    if w.data.shape != expected:
        raise ValueError(f"embedding shape {w.data.shape} does not match config {expected}")


def synthesize(pyr: SubbandPyramid, cfg: TokenizerConfig) -> color.YcbcrPlanes:
    y = _recompose(pyr.y_details, pyr.y_approx, cfg.family)
    cb = _recompose(pyr.cb_details, pyr.cb_approx, cfg.family)
    cr = _recompose(pyr.cr_details, pyr.cr_approx, cfg.family)
    return color.YcbcrPlanes(y, cb, cr)


def truncation_threshold(values: np.ndarray, percent: float) -> float | None:
    """Magnitude at the ``percent`` quantile, or ``None`` if nothing is zeroed."""
    mags = np.sort(np.abs(values), axis=None)
    # small epsilon guards products like 0.7 * 10 = 7.000000000000001
    count = math.ceil(percent * mags.size - 1e-9)
    if count <= 0:
        return None
    return float(mags[count - 1])


def truncation_mask(w: PixelSpaceEmbedding, percent: float, detail_only: bool = False) -> np.ndarray:
    """Boolean mask of the entries that truncation sets to zero."""
    if not 0.0 <= percent < 1.0:
        raise ValueError(f"truncation percent must be in [0, 1), got {percent}")
    eligible = np.ones(w.data.shape, dtype=bool)
    if detail_only:
        eligible[:, :, w.segments[0].offset:w.segments[0].offset + APPROX_CHANNELS] = False
    t = truncation_threshold(w.data[eligible], percent)
    if t is None:
        return np.zeros(w.data.shape, dtype=bool)
    return eligible & (np.abs(w.data) <= t)


def truncate(w: PixelSpaceEmbedding, percent: float, detail_only: bool = False) -> PixelSpaceEmbedding:
    """Zero every entry whose magnitude is at or below the per-image quantile.

    With ``detail_only`` the quantile is taken over detail coefficients only
    and the coarse Y/Cb/Cr channels pass through.
    """
    mask = truncation_mask(w, percent, detail_only)
    data = np.where(mask, np.float32(0.0), w.data)
    return replace(w, data=data)


def sparsity_stats(w: PixelSpaceEmbedding, zero_tol: float = 0.0) -> dict[int, float]:
    """Fraction of entries with ``|value| > zero_tol`` per level."""
    if zero_tol < 0:
        raise ValueError(f"zero_tol must be >= 0, got {zero_tol}")
    return {
        seg.level: float(np.count_nonzero(np.abs(w.data[:, :, seg.slice]) > zero_tol))
        / (w.grid * w.grid * seg.size)
        for seg in w.segments
    }


def tokenize(img: RgbImage, cfg: TokenizerConfig, truncate_output: bool = True) -> PixelSpaceEmbedding:
    """Image to (optionally truncated) pixel-space embedding."""
    if img.height != cfg.resolution or img.width != cfg.resolution:
        raise ValueError(
            f"image is {img.height}x{img.width}, config expects "
            f"{cfg.resolution}x{cfg.resolution}"
        )
    w = gather(analyze(color.to_planes(img), cfg), cfg)
    if truncate_output and cfg.truncation_percent > 0:
        w = truncate(w, cfg.truncation_percent, cfg.detail_only)
    return w


def detokenize_planes(w: PixelSpaceEmbedding, cfg: TokenizerConfig) -> color.YcbcrPlanes:
    return synthesize(scatter(w, cfg), cfg)


def detokenize(w: PixelSpaceEmbedding, cfg: TokenizerConfig) -> RgbImage:
    """Reverse the pipeline: scatter, synthesize, upsample chroma, back to RGB."""
    return color.from_planes(detokenize_planes(w, cfg))
