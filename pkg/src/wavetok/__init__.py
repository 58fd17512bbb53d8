"""Wavelet image tokenizer for vision transformers."""
from .color import YcbcrPlanes, downsample_chroma, rgb_to_ycbcr, upsample_chroma, ycbcr_to_rgb
from .image_io import RgbImage, load_image, read_tensor, save_image, write_tensor
from .pipeline import (
    PixelSpaceEmbedding,
    SubbandPyramid,
    TokenizerConfig,
    analyze,
    channel_counts,
    detokenize,
    gather,
    scatter,
    space_to_depth,
    sparsity_stats,
    tokenize,
    truncate,
)
from .projection import (
    BlockSparseProjection,
    SemanticEmbedding,
    allocate_embedding_sizes,
    init_projection,
    project,
    project_grad,
    projection_param_count,
)
from .wavelet import Subbands, dwt2_level, idwt2_level, kernels_1d, kernels_2d

__version__ = "0.1.0"
