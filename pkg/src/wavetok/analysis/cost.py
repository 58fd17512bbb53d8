"""Per-layer op counts and parameter estimates for ViT encoders."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction

from ..pipeline import channel_counts
from ..projection import allocate_embedding_sizes, projection_param_count


@dataclass(frozen=True)
class CostReport:
    T: int
    H: int
    d_model: int
    d_ff: int
    attn_proj_ops: int
    attn_qk_av_ops: int
    ff_ops: int

    @property
    def m(self) -> Fraction:
        return Fraction(self.d_ff, self.H)

    @property
    def total_ops(self) -> int:
        return self.attn_proj_ops + self.attn_qk_av_ops + self.ff_ops

    @property
    def ratio_r(self) -> Fraction:
        """Token-quadratic term over the hidden-quadratic terms."""
        return Fraction(self.attn_qk_av_ops, self.attn_proj_ops + self.ff_ops)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(m=float(self.m), total_ops=self.total_ops, ratio_r=float(self.ratio_r))
        return d


def transformer_layer_flops(T: int, H: int, d_model: int, d_ff: int) -> CostReport:
    """Forward op counts of one encoder layer.

    Q/K/V/O projections cost ``4 T H d_model``, the two attention products
    ``2 T^2 d_model`` and the feed-forward block ``2 T H d_ff``.
    """
    for name, v in (("T", T), ("H", H), ("d_model", d_model), ("d_ff", d_ff)):
        if v <= 0:
            raise ValueError(f"{name} must be positive, got {v}")
    return CostReport(
        T=T,
        H=H,
        d_model=d_model,
        d_ff=d_ff,
        attn_proj_ops=4 * T * H * d_model,
        attn_qk_av_ops=2 * T * T * d_model,
        ff_ops=2 * T * H * d_ff,
    )


def quadratic_ratio(T: int, H: int, m=4) -> Fraction:
    """``T / ((m + 2) H)``, exact for integer or rational arguments."""
    if T <= 0 or H <= 0 or m <= 0:
        raise ValueError("T, H and m must be positive")
    return Fraction(T) / ((Fraction(m) + 2) * Fraction(H))


@dataclass(frozen=True)
class PatchTokenizer:
    patch: int

    def params(self, H: int) -> int:
        # conv weights plus bias
        return self.patch * self.patch * 3 * H + H


@dataclass(frozen=True)
class WaveletTokenizer:
    level: int
    family: str = "db1"
    h_k: tuple[int, ...] = ()

    def params(self, H: int) -> int:
        if sum(self.h_k) != H:
            raise ValueError(f"H_k {self.h_k} does not sum to H = {H}")
        return projection_param_count(channel_counts(self.level), self.h_k)


@dataclass(frozen=True)
class VitParamConfig:
    layers: int
    H: int
    d_model: int
    d_ff: int
    tokens: int
    classes: int = 1000
    tokenizer: PatchTokenizer | WaveletTokenizer = field(default_factory=lambda: PatchTokenizer(16))

    def __post_init__(self):
        for name in ("layers", "H", "d_model", "d_ff", "tokens", "classes"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def vit_param_count(cfg: VitParamConfig) -> int:
    """Trainable parameters of a ViT classifier.

    Per layer: Q/K/V/O maps between ``H`` and ``d_model``, the two
    feed-forward matrices and two layer norms. On top: tokenizer, learned
    positional embeddings, class token, final norm and classifier head.
    Biases inside the layers are not counted.
    """
    H = cfg.H
    per_layer = 4 * H * cfg.d_model + 2 * H * cfg.d_ff + 4 * H
    return (
        cfg.layers * per_layer
        + cfg.tokenizer.params(H)
        + cfg.tokens * H
        + H
        + H * cfg.classes
        + cfg.classes
        + 2 * H
    )


# default density for levels below L-1 when splitting H across levels
DEFAULT_FINE_DENSITY = 0.2


def wavelet_config(family: str, level: int, resolution: int, H: int, d_model: int = 768,
                   d_ff: int = 3072, layers: int = 12, classes: int = 1000,
                   density: float = DEFAULT_FINE_DENSITY) -> VitParamConfig:
    c_k = channel_counts(level)
    h_k = allocate_embedding_sizes(c_k, [1.0, 1.0] + [density] * (level - 2), H)
    return VitParamConfig(
        layers=layers, H=H, d_model=d_model, d_ff=d_ff,
        tokens=(resolution // 2 ** level) ** 2, classes=classes,
        tokenizer=WaveletTokenizer(level, family, tuple(h_k)),
    )


def patch_config(patch: int, resolution: int, H: int = 768, d_model: int = 768,
                 d_ff: int = 3072, layers: int = 12, classes: int = 1000) -> VitParamConfig:
    return VitParamConfig(
        layers=layers, H=H, d_model=d_model, d_ff=d_ff,
        tokens=(resolution // patch) ** 2, classes=classes,
        tokenizer=PatchTokenizer(patch),
    )


# tokenizer variants at 256x256 and 512x512 input
PRESETS = {
    "patch/8": lambda: patch_config(8, 256),
    "patch/16": lambda: patch_config(16, 256),
    "coif1-3": lambda: wavelet_config("coif1", 3, 256, H=384),
    "db1-4": lambda: wavelet_config("db1", 4, 256, H=384),
    "patch/16@512": lambda: patch_config(16, 512),
    "patch/32@512": lambda: patch_config(32, 512),
    "coif1-4@512": lambda: wavelet_config("coif1", 4, 512, H=384),
    "db1-5@512": lambda: wavelet_config("db1", 5, 512, H=512),
}


def preset(name: str) -> VitParamConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def format_table(report: CostReport, params: int | None = None) -> str:
    rows = [
        ("tokens T", report.T),
        ("embedding H", report.H),
        ("d_model", report.d_model),
        ("d_ff", report.d_ff),
        ("m = d_ff/H", f"{float(report.m):.4g}"),
        ("attn projections", f"{report.attn_proj_ops:,}"),
        ("attn QK^T and AV", f"{report.attn_qk_av_ops:,}"),
        ("feed-forward", f"{report.ff_ops:,}"),
        ("total per layer", f"{report.total_ops:,}"),
        ("ratio r", f"{float(report.ratio_r):.4f}"),
    ]
    if params is not None:
        rows.append(("params", f"{params:,} ({params / 1e6:.2f}M)"))
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)
