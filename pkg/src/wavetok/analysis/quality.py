"""Reconstruction quality and additive-noise behaviour of the tokenizer."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..image_io import RgbImage
from ..pipeline import TokenizerConfig, tokenize, truncation_mask


def psnr(a, b) -> float:
    """``10 log10(1 / MSE)`` for signals in [0, 1]; ``inf`` when identical."""
    x = a.data if isinstance(a, RgbImage) else np.asarray(a)
    y = b.data if isinstance(b, RgbImage) else np.asarray(b)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    mse = float(np.mean((x.astype(np.float64) - y.astype(np.float64)) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = a.ravel().astype(np.float64)
    b = b.ravel().astype(np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 and nb == 0.0:
        return 1.0
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


@dataclass(frozen=True)
class NoiseReport:
    sigma: float
    # share of ||W(noisy) - W(clean)||^2 on entries truncation zeroes in W(noisy)
    noise_energy_in_zeroed_fraction: float
    # share of coefficients touched by the noise that truncation zeroes
    zeroed_coefficient_fraction: float
    embedding_cosine_similarity: float
    raw_cosine_similarity: float

    def to_dict(self) -> dict:
        return asdict(self)


def noise_probe(img: RgbImage, sigma: float, cfg: TokenizerConfig, seed: int = 0) -> NoiseReport:
    """Tokenize ``img`` with and without i.i.d. Gaussian noise and compare.

    ``sigma == 0`` short-circuits to similarity 1 and zeroed fraction 1.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return NoiseReport(0.0, 1.0, 1.0, 1.0, 1.0)
    rng = np.random.default_rng(seed)
    noisy = RgbImage(np.clip(img.data + rng.normal(0.0, sigma, img.data.shape), 0.0, 1.0))

    w_clean = tokenize(img, cfg, truncate_output=False)
    w_noisy = tokenize(noisy, cfg, truncate_output=False)
    mask_clean = truncation_mask(w_clean, cfg.truncation_percent, cfg.detail_only)
    mask_noisy = truncation_mask(w_noisy, cfg.truncation_percent, cfg.detail_only)

    diff = (w_noisy.data - w_clean.data).astype(np.float64)
    energy = float(np.sum(diff ** 2))
    touched = diff != 0
    if energy == 0.0:
        zeroed_energy = zeroed_count = 1.0
    else:
        zeroed_energy = float(np.sum(diff[mask_noisy] ** 2)) / energy
        zeroed_count = float(np.count_nonzero(mask_noisy & touched)) / np.count_nonzero(touched)

    trunc_clean = np.where(mask_clean, 0.0, w_clean.data)
    trunc_noisy = np.where(mask_noisy, 0.0, w_noisy.data)
    return NoiseReport(
        sigma=float(sigma),
        noise_energy_in_zeroed_fraction=zeroed_energy,
        zeroed_coefficient_fraction=zeroed_count,
        embedding_cosine_similarity=_cosine(trunc_clean, trunc_noisy),
        raw_cosine_similarity=_cosine(w_clean.data, w_noisy.data),
    )
