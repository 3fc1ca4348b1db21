"""Minimal 8-bit PGM reader/writer (binary P5, ASCII P2 on input).

PNG files go through Pillow when it is installed.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from .errors import ParseError, ShapeError

PathLike = Union[str, Path]


def _header_tokens(data: bytes, count: int) -> Tuple[List[bytes], int]:
    """First ``count`` whitespace-separated header tokens, skipping comments."""
    tokens: List[bytes] = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise ParseError("truncated PGM header")
        if data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def decode_pgm(data: bytes) -> np.ndarray:
    tokens, offset = _header_tokens(data, 4)
    magic = tokens[0]
    if magic not in (b"P5", b"P2"):
        raise ParseError(f"not a PGM file (magic {magic!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ParseError("malformed PGM header") from None
    if width <= 0 or height <= 0 or not 0 < maxval <= 255:
        raise ParseError(f"unsupported PGM: {width}x{height}, maxval {maxval}")
    if magic == b"P5":
        if len(data) - offset < width * height:
            raise ParseError("truncated PGM raster")
        raster = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=offset)
        img = raster.reshape(height, width).copy()
    else:
        values = data[offset - 1 :].split()
        if len(values) < width * height:
            raise ParseError("truncated PGM raster")
        img = np.array([int(v) for v in values[: width * height]], dtype=np.int64).reshape(height, width)
        if img.min() < 0 or img.max() > maxval:
            raise ParseError("PGM sample outside [0, maxval]")
        img = img.astype(np.uint8)
    if maxval != 255:
        img = np.rint(img.astype(np.float64) * 255.0 / maxval).astype(np.uint8)
    return img


def encode_pgm(image: np.ndarray) -> bytes:
    img = np.asarray(image)
    if img.ndim != 2:
        raise ShapeError(f"PGM needs a 2-D image, got shape {img.shape}")
    if img.dtype != np.uint8:
        if img.min() < 0 or img.max() > 255:
            raise ShapeError("pixel values must lie in [0, 255]")
        img = img.astype(np.uint8)
    h, w = img.shape
    return b"P5\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(img).tobytes()


def read_image(path: PathLike) -> np.ndarray:
    path = Path(path)
    if path.suffix.lower() == ".png":
        from PIL import Image

        with Image.open(path) as im:
            return np.asarray(im.convert("L"), dtype=np.uint8).copy()
    return decode_pgm(path.read_bytes())


def write_image(image: np.ndarray, path: PathLike) -> None:
    path = Path(path)
    if path.suffix.lower() == ".png":
        from PIL import Image

        Image.fromarray(np.asarray(image, dtype=np.uint8), mode="L").save(path)
        return
    path.write_bytes(encode_pgm(image))


def logo_to_image(logo: np.ndarray) -> np.ndarray:
    """Binary logo -> 0/255 image."""
    return np.where(np.asarray(logo) != 0, 255, 0).astype(np.uint8)


def image_to_logo(image: np.ndarray) -> np.ndarray:
    return (np.asarray(image) >= 128).astype(np.uint8)
