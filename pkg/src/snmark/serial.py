"""Serial number <-> binary logo conversion.

A 32-bit serial number (8 hex digits) becomes a binary logo in which every
bit occupies one constant ``n x m`` block of a ``grid_rows x grid_cols``
grid. Four copies of the logo are tiled into the image corners, and a
possibly corrupted logo is decoded back by per-block majority vote.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, ParseError, ShapeError

SN_BITS = 32
SN_HEX_DIGITS = 8

_SEPARATORS = re.compile(r"[\s:\-]")


@dataclass(frozen=True)
class SerialNumber:
    """32-bit serial number, MSB of the first hex digit first."""

    bits: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.bits) != SN_BITS or any(b not in (0, 1) for b in self.bits):
            raise ParseError(f"serial number needs {SN_BITS} binary values")

    @property
    def hex(self) -> str:
        return f"{self.value:08X}"

    @property
    def value(self) -> int:
        out = 0
        for b in self.bits:
            out = (out << 1) | b
        return out

    @classmethod
    def from_int(cls, value: int) -> "SerialNumber":
        if not 0 <= value < 2**SN_BITS:
            raise ParseError(f"serial value {value} outside 32-bit range")
        return cls(tuple((value >> (SN_BITS - 1 - k)) & 1 for k in range(SN_BITS)))

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.uint8)

    def grouped(self) -> str:
        """Bit string in nibbles, e.g. ``'0100 1100 ...'``."""
        s = "".join(map(str, self.bits))
        return " ".join(s[i : i + 4] for i in range(0, SN_BITS, 4))

    def __str__(self) -> str:
        return self.hex


def parse_serial_hex(text: str) -> SerialNumber:
    """Parse an 8-hex-digit serial number such as ``"4C F9 DF CA"``.

    Whitespace, colons and dashes between byte pairs are ignored. Errors
    name the offending position in the original string.
    """
    digits: List[Tuple[int, str]] = []
    for pos, ch in enumerate(text):
        if _SEPARATORS.fullmatch(ch):
            continue
        if ch not in "0123456789abcdefABCDEF":
            raise ParseError(f"non-hex character {ch!r} at position {pos} in {text!r}")
        digits.append((pos, ch))
    if len(digits) != SN_HEX_DIGITS:
        where = digits[SN_HEX_DIGITS][0] if len(digits) > SN_HEX_DIGITS else len(text)
        raise ParseError(
            f"serial number must have {SN_HEX_DIGITS} hex digits, got {len(digits)} "
            f"(position {where} in {text!r})"
        )
    bits: List[int] = []
    for _, ch in digits:
        nibble = int(ch, 16)
        bits.extend((nibble >> s) & 1 for s in (3, 2, 1, 0))
    return SerialNumber(tuple(bits))


@dataclass(frozen=True)
class LogoSpec:
    """Block geometry of a logo: ``grid_rows x grid_cols`` blocks of ``block_rows x block_cols`` pixels."""

    block_rows: int = 8
    block_cols: int = 8
    grid_rows: int = 4
    grid_cols: int = 8

    def __post_init__(self) -> None:
        for name in ("block_rows", "block_cols", "grid_rows", "grid_cols"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.grid_rows * self.grid_cols != SN_BITS:
            raise ConfigError(
                f"grid {self.grid_rows}x{self.grid_cols} holds "
                f"{self.grid_rows * self.grid_cols} blocks, need {SN_BITS}"
            )

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.grid_rows * self.block_rows, self.grid_cols * self.block_cols)

    @property
    def block_size(self) -> int:
        return self.block_rows * self.block_cols

    def to_text(self) -> str:
        return f"{self.block_rows}x{self.block_cols},{self.grid_rows}x{self.grid_cols}"

    @classmethod
    def from_text(cls, text: str) -> "LogoSpec":
        try:
            block, grid = text.split(",")
            n, m = (int(v) for v in block.lower().split("x"))
            gr, gc = (int(v) for v in grid.lower().split("x"))
        except ValueError:
            raise ParseError(f"logo spec must look like '8x8,4x8', got {text!r}") from None
        return cls(n, m, gr, gc)


@dataclass(frozen=True)
class BinaryLogo:
    pixels: np.ndarray
    spec: LogoSpec


@dataclass(frozen=True)
class TiledLogo:
    """Image-sized binary mask holding four corner copies of a logo."""

    pixels: np.ndarray
    footprints: Tuple[Tuple[slice, slice], ...]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.pixels.shape

    def footprint_mask(self) -> np.ndarray:
        return footprint_mask(self.pixels.shape, self.footprints)


def serial_to_logo(sn: SerialNumber, spec: LogoSpec = LogoSpec()) -> BinaryLogo:
    grid = sn.as_array().reshape(spec.grid_rows, spec.grid_cols)
    block = np.ones((spec.block_rows, spec.block_cols), dtype=np.uint8)
    return BinaryLogo(np.kron(grid, block).astype(np.uint8), spec)


def corner_footprints(
    image_shape: Tuple[int, int], logo_shape: Tuple[int, int]
) -> Tuple[Tuple[slice, slice], ...]:
    """Top-left, top-right, bottom-left, bottom-right logo positions."""
    M, N = image_shape
    h, w = logo_shape
    if 2 * h > M or 2 * w > N:
        raise ShapeError(
            f"image {M}x{N} too small for four {h}x{w} corner logos; "
            f"need at least {2 * h}x{2 * w}"
        )
    return tuple(
        (slice(r, r + h), slice(c, c + w)) for r in (0, M - h) for c in (0, N - w)
    )


def footprint_mask(
    image_shape: Tuple[int, int], footprints: Sequence[Tuple[slice, slice]]
) -> np.ndarray:
    mask = np.zeros(image_shape, dtype=bool)
    for fp in footprints:
        mask[fp] = True
    return mask


def tile_logo(logo: BinaryLogo, rows: int, cols: int) -> TiledLogo:
    footprints = corner_footprints((rows, cols), logo.pixels.shape)
    pixels = np.zeros((rows, cols), dtype=np.uint8)
    for fp in footprints:
        pixels[fp] = logo.pixels
    return TiledLogo(pixels, footprints)


def block_votes(extracted: np.ndarray, spec: LogoSpec = LogoSpec()) -> np.ndarray:
    """Number of 1-pixels in every block, as a ``grid_rows x grid_cols`` array."""
    extracted = np.asarray(extracted)
    if extracted.shape != spec.shape:
        raise ShapeError(f"logo shape {extracted.shape} does not match spec {spec.shape}")
    blocks = extracted.reshape(
        spec.grid_rows, spec.block_rows, spec.grid_cols, spec.block_cols
    )
    return (blocks != 0).sum(axis=(1, 3))


def decode_serial(extracted: np.ndarray, spec: LogoSpec = LogoSpec()) -> Optional[SerialNumber]:
    """Majority-vote decode of a logo; ``None`` when any block is a tie."""
    ones = block_votes(extracted, spec).ravel()
    zeros = spec.block_size - ones
    if np.any(ones == zeros):
        return None
    return SerialNumber(tuple(int(b) for b in (ones > zeros)))
