from .cost import (
    PRESETS,
    CostReport,
    PatchTokenizer,
    VitParamConfig,
    WaveletTokenizer,
    preset,
    quadratic_ratio,
    transformer_layer_flops,
    vit_param_count,
)
from .quality import NoiseReport, noise_probe, psnr
from .rank import RankExperiment, estimate_rank, verify_prop1, verify_prop2

__all__ = [
    "PRESETS",
    "CostReport",
    "NoiseReport",
    "PatchTokenizer",
    "RankExperiment",
    "VitParamConfig",
    "WaveletTokenizer",
    "estimate_rank",
    "noise_probe",
    "preset",
    "psnr",
    "quadratic_ratio",
    "transformer_layer_flops",
    "verify_prop1",
    "verify_prop2",
    "vit_param_count",
]
