"""Image decoding and the WVTK tensor container.

Images are decoded to float32 arrays of shape ``(height, width, 3)`` with
values ``v / 255``. Tensors are stored in a small little-endian binary
format::

    magic   4 bytes  b"WVTK"
    version u32      1
    dtype   u8       0 (float32)
    rank    u8
    dims    rank x u64
    payload row-major float32 values
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

MAGIC = b"WVTK"
VERSION = 1
DTYPE_F32 = 0
_HEADER = struct.Struct("<4sIBB")


class ImageFormatError(ValueError):
    """Unsupported, corrupt or empty image file."""


class TensorFormatError(ValueError):
    """Malformed WVTK tensor file."""


@dataclass(frozen=True)
class RgbImage:
    """Decoded image; ``data`` is float32 ``(height, width, 3)`` in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 3 or data.shape[2] != 3:
            raise ValueError(f"expected (height, width, 3) array, got {data.shape}")
        if data.shape[0] == 0 or data.shape[1] == 0:
            raise ValueError("zero-sized image")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other):
        if not isinstance(other, RgbImage):
            return NotImplemented
        return self.data.shape == other.data.shape and np.array_equal(self.data, other.data)

    def to_uint8(self) -> np.ndarray:
        return np.round(np.clip(self.data, 0.0, 1.0) * 255.0).astype(np.uint8)


def _read_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    # PPM header tokens are whitespace separated; '#' starts a comment line
    n = len(buf)
    while pos < n:
        ch = buf[pos:pos + 1]
        if ch == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise ImageFormatError("truncated PPM header")
    return buf[start:pos], pos


def _decode_ppm(buf: bytes) -> np.ndarray:
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _read_token(buf, pos)
        if not tok.isdigit():
            raise ImageFormatError(f"bad PPM header field {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise ImageFormatError("truncated PPM header")
    pos += 1
    if maxval != 255:
        raise ImageFormatError(f"unsupported PPM maxval {maxval}, only 255 is accepted")
    if width == 0 or height == 0:
        raise ImageFormatError("zero-sized image")
    expected = width * height * 3
    payload = buf[pos:pos + expected]
    if len(payload) != expected:
        raise ImageFormatError(f"PPM payload has {len(payload)} bytes, expected {expected}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)


def _decode_png(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            if im.format != "PNG":
                raise ImageFormatError(f"unsupported image format {im.format}")
            if im.mode in ("I", "I;16", "I;16B", "F"):
                raise ImageFormatError(f"unsupported PNG mode {im.mode}")
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageFormatError(f"corrupt PNG file: {exc}") from exc
    if arr.size == 0:
        raise ImageFormatError("zero-sized image")
    return arr


def load_image(path) -> RgbImage:
    """Decode a PNG or binary PPM (P6, maxval 255) file.

    Raises
    ------
    ImageFormatError
        For any other format, a truncated/corrupt file or a zero-sized image.
    """
    with open(path, "rb") as fh:
        head = fh.read(8)
    if head[:2] == b"P6":
        with open(path, "rb") as fh:
            arr = _decode_ppm(fh.read())
    elif head.startswith(b"\x89PNG\r\n\x1a\n"):
        arr = _decode_png(path)
    else:
        raise ImageFormatError(f"unsupported image format in {os.fspath(path)!r}")
    return RgbImage(arr.astype(np.float32) / np.float32(255.0))


def save_image(img: RgbImage, path) -> None:
    """Write ``img`` as 8-bit PPM if the suffix is ``.ppm``, PNG otherwise."""
    arr = img.to_uint8()
    if os.fspath(path).lower().endswith(".ppm"):
        with open(path, "wb") as fh:
            fh.write(b"P6\n%d %d\n255\n" % (arr.shape[1], arr.shape[0]))
            fh.write(arr.tobytes())
    else:
        Image.fromarray(arr, mode="RGB").save(path, format="PNG")


def write_tensor(tensor, path) -> None:
    t = np.asarray(tensor, dtype="<f4")
    if t.ndim < 1 or t.ndim > 255:
        raise TensorFormatError(f"tensor rank must be in [1, 255], got {t.ndim}")
    if any(d < 1 for d in t.shape):
        raise TensorFormatError(f"all dims must be >= 1, got {t.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, DTYPE_F32, t.ndim))
        fh.write(struct.pack(f"<{t.ndim}Q", *t.shape))
        fh.write(t.tobytes(order="C"))


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < _HEADER.size:
        raise TensorFormatError("file too short for WVTK header")
    magic, version, dtype, rank = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise TensorFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise TensorFormatError(f"unsupported WVTK version {version}")
    if dtype != DTYPE_F32:
        raise TensorFormatError(f"unsupported dtype code {dtype}")
    if rank < 1:
        raise TensorFormatError("rank must be >= 1")
    off = _HEADER.size
    if len(buf) < off + 8 * rank:
        raise TensorFormatError("file too short for WVTK dims")
    dims = struct.unpack_from(f"<{rank}Q", buf, off)
    off += 8 * rank
    count = int(np.prod(dims, dtype=np.int64))
    if len(buf) - off != 4 * count:
        raise TensorFormatError(
            f"payload length {len(buf) - off} does not match dims {dims} ({4 * count} bytes)"
        )
    return np.frombuffer(buf, dtype="<f4", offset=off).astype(np.float32).reshape(dims)
