"""Keyed multi-bit-plane logo embedding.

A secret uniform random matrix, regenerated from a seed, assigns every pixel
to one of ``L`` layers through ascending thresholds. Logo pixels of layer
``k`` are written into bit plane ``planes[k]`` of the cover. Without the
seed, thresholds and plane list the receiver cannot tell which plane of a
pixel carries the logo bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ParseError, ShapeError, WatermarkKeyError
from .serial import (
    LogoSpec,
    SerialNumber,
    TiledLogo,
    corner_footprints,
    decode_serial,
    serial_to_logo,
)

BIT_DEPTH = 8
GENERATOR_ID = "numpy-pcg64"
KEY_MAGIC = "snmark-key v1"


def default_planes(layer_count: int) -> Tuple[int, ...]:
    """``layer_count`` consecutive planes centred in the 8-bit range."""
    start = (BIT_DEPTH - layer_count) // 2
    return tuple(range(start, start + layer_count))


@dataclass(frozen=True)
class WatermarkKey:
    seed: int
    thresholds: Tuple[float, ...]
    planes: Tuple[int, ...]
    logo_spec: LogoSpec = LogoSpec()
    shape: Tuple[int, int] = (512, 512)
    generator: str = GENERATOR_ID

    def __post_init__(self) -> None:
        _check_key(self)

    @property
    def layer_count(self) -> int:
        return len(self.planes)

    def random_matrix(self) -> np.ndarray:
        """The secret matrix, uniform on [0, 1), regenerated from the seed."""
        return np.random.Generator(np.random.PCG64(self.seed)).random(self.shape)

    def layer_map(self) -> np.ndarray:
        """Layer index 0..L-1 of every pixel; layer k covers [w_k, w_k+1)."""
        inner = np.asarray(self.thresholds[1:-1])
        return np.searchsorted(inner, self.random_matrix(), side="right")

    def plane_map(self) -> np.ndarray:
        return np.asarray(self.planes)[self.layer_map()]

    def footprints(self) -> Tuple[Tuple[slice, slice], ...]:
        return corner_footprints(self.shape, self.logo_spec.shape)

    def with_shape(self, shape: Tuple[int, int]) -> "WatermarkKey":
        return WatermarkKey(
            self.seed, self.thresholds, self.planes, self.logo_spec, tuple(shape), self.generator
        )

    def to_text(self) -> str:
        lines = [
            f"# {KEY_MAGIC}",
            f"generator={self.generator}",
            f"seed={self.seed}",
            f"layers={self.layer_count}",
            "thresholds=" + ",".join(repr(float(t)) for t in self.thresholds),
            "planes=" + ",".join(str(p) for p in self.planes),
            f"logo={self.logo_spec.to_text()}",
            f"image={self.shape[0]}x{self.shape[1]}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "WatermarkKey":
        fields = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            name, sep, value = line.partition("=")
            if not sep:
                raise ParseError(f"key file line {lineno}: expected name=value, got {raw!r}")
            fields[name.strip()] = value.strip()
        missing = {"generator", "seed", "layers", "thresholds", "planes", "logo", "image"} - set(fields)
        if missing:
            raise ParseError(f"key file missing fields: {', '.join(sorted(missing))}")
        if fields["generator"] != GENERATOR_ID:
            raise ParseError(f"unsupported generator {fields['generator']!r}")
        try:
            rows, cols = (int(v) for v in fields["image"].lower().split("x"))
            key = cls(
                seed=int(fields["seed"]),
                thresholds=tuple(float(v) for v in fields["thresholds"].split(",")),
                planes=tuple(int(v) for v in fields["planes"].split(",")),
                logo_spec=LogoSpec.from_text(fields["logo"]),
                shape=(rows, cols),
            )
        except ValueError as exc:
            if isinstance(exc, (ParseError, WatermarkKeyError)):
                raise
            raise ParseError(f"malformed key file: {exc}") from None
        if key.layer_count != int(fields["layers"]):
            raise ParseError("key file layer count disagrees with plane list")
        return key


def _check_key(key: WatermarkKey) -> None:
    if not 0 <= key.seed < 2**64:
        raise WatermarkKeyError(f"seed must be a 64-bit unsigned integer, got {key.seed}")
    L = len(key.planes)
    if not 1 <= L <= BIT_DEPTH:
        raise WatermarkKeyError(f"layer count must be in 1..{BIT_DEPTH}, got {L}")
    for p in key.planes:
        if not 0 <= p < BIT_DEPTH:
            raise WatermarkKeyError(f"bit plane {p} outside 0..{BIT_DEPTH - 1}")
    if len(set(key.planes)) != L:
        raise WatermarkKeyError(f"bit planes must be distinct, got {list(key.planes)}")
    t = key.thresholds
    if len(t) != L + 1:
        raise WatermarkKeyError(f"{L} layers need {L + 1} thresholds, got {len(t)}")
    if t[0] != 0.0 or t[-1] != 1.0 or any(a >= b for a, b in zip(t, t[1:])):
        raise WatermarkKeyError(f"thresholds must rise strictly from 0 to 1, got {list(t)}")
    if len(key.shape) != 2 or min(key.shape) <= 0:
        raise WatermarkKeyError(f"invalid image shape {key.shape}")


def generate_key(
    seed: int,
    layer_count: int = 4,
    planes: Optional[Sequence[int]] = None,
    logo_spec: LogoSpec = LogoSpec(),
    shape: Tuple[int, int] = (512, 512),
    thresholds: Optional[Sequence[float]] = None,
) -> WatermarkKey:
    """Build a key with equidistant thresholds ``k / L`` unless given explicitly."""
    if not 1 <= layer_count <= BIT_DEPTH:
        raise WatermarkKeyError(f"layer count must be in 1..{BIT_DEPTH}, got {layer_count}")
    if planes is None:
        planes = default_planes(layer_count)
    if len(planes) != layer_count:
        raise WatermarkKeyError(f"{layer_count} layers need {layer_count} planes, got {len(planes)}")
    if thresholds is None:
        thresholds = [k / layer_count for k in range(layer_count + 1)]
    return WatermarkKey(
        seed=int(seed),
        thresholds=tuple(float(t) for t in thresholds),
        planes=tuple(int(p) for p in planes),
        logo_spec=logo_spec,
        shape=(int(shape[0]), int(shape[1])),
    )


def save_key(key: WatermarkKey, path: Union[str, Path]) -> None:
    Path(path).write_text(key.to_text(), encoding="utf-8")


def load_key(path: Union[str, Path]) -> WatermarkKey:
    return WatermarkKey.from_text(Path(path).read_text(encoding="utf-8"))


@dataclass
class LayerSet:
    layers: List[np.ndarray]
    layer_map: np.ndarray

    def total(self) -> np.ndarray:
        return np.sum(self.layers, axis=0).astype(np.uint8)


def _check_shape(name: str, arr: np.ndarray, key: WatermarkKey) -> None:
    if arr.shape != key.shape:
        raise ShapeError(f"{name} shape {arr.shape} does not match key image shape {key.shape}")


def split_layers(logo: TiledLogo, key: WatermarkKey) -> LayerSet:
    _check_shape("tiled logo", logo.pixels, key)
    lmap = key.layer_map()
    layers = [np.where(lmap == k, logo.pixels, 0).astype(np.uint8) for k in range(key.layer_count)]
    return LayerSet(layers, lmap)


def as_gray(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.ndim != 2:
        raise ShapeError(f"expected a 2-D grayscale image, got shape {image.shape}")
    if image.dtype != np.uint8:
        if np.any(image < 0) or np.any(image > 255):
            raise ShapeError("grayscale pixel values must lie in [0, 255]")
        image = image.astype(np.uint8)
    return image


def embed(image: np.ndarray, logo: TiledLogo, key: WatermarkKey) -> np.ndarray:
    """Write each footprint pixel's logo bit into its layer's bit plane.

    Both 0 and 1 bits are written, so extraction reads back the logo exactly.
    Pixels outside the four footprints are returned untouched.
    """
    image = as_gray(image)
    _check_shape("image", image, key)
    _check_shape("tiled logo", logo.pixels, key)
    bit = (np.uint8(1) << key.plane_map().astype(np.uint8)).astype(np.uint8)
    marked = np.where(logo.pixels != 0, image | bit, image & ~bit)
    return np.where(logo.footprint_mask(), marked, image).astype(np.uint8)


@dataclass
class CornerResult:
    logo: np.ndarray
    candidate: Optional[SerialNumber]
    logo_errors: Optional[int] = None
    sn_bit_errors: Optional[int] = None


@dataclass
class ExtractionReport:
    corners: List[CornerResult] = field(default_factory=list)
    reference: Optional[SerialNumber] = None

    CORNER_NAMES = ("top-left", "top-right", "bottom-left", "bottom-right")

    @property
    def candidates(self) -> List[Optional[SerialNumber]]:
        return [c.candidate for c in self.corners]

    @property
    def logo_pixels(self) -> int:
        return int(self.corners[0].logo.size) if self.corners else 0

    def to_dict(self) -> dict:
        return {
            "reference": self.reference.hex if self.reference else None,
            "corners": [
                {
                    "corner": name,
                    "candidate": c.candidate.hex if c.candidate else None,
                    "logo_errors": c.logo_errors,
                    "sn_bit_errors": c.sn_bit_errors,
                }
                for name, c in zip(self.CORNER_NAMES, self.corners)
            ],
        }


def extract_bits(image: np.ndarray, key: WatermarkKey) -> np.ndarray:
    """Image-sized array of the bit stored in each pixel's keyed plane."""
    image = as_gray(image)
    _check_shape("image", image, key)
    return ((image >> key.plane_map().astype(np.uint8)) & 1).astype(np.uint8)


def extract(
    image: np.ndarray,
    key: WatermarkKey,
    spec: Optional[LogoSpec] = None,
    reference: Optional[SerialNumber] = None,
) -> ExtractionReport:
    """Recover the four corner logos and majority-decode each one.

    A wrong key is not detected here; it just produces unrelated bits.
    """
    if spec is not None and spec != key.logo_spec:
        key = WatermarkKey(key.seed, key.thresholds, key.planes, spec, key.shape, key.generator)
    bits = extract_bits(image, key)
    ref_logo = None
    if reference is not None:
        ref_logo = serial_to_logo(reference, key.logo_spec).pixels
    report = ExtractionReport(reference=reference)
    for fp in key.footprints():
        logo = bits[fp].copy()
        cand = decode_serial(logo, key.logo_spec)
        res = CornerResult(logo, cand)
        if ref_logo is not None:
            res.logo_errors = int(np.count_nonzero(logo != ref_logo))
            if cand is not None:
                res.sn_bit_errors = int(np.count_nonzero(cand.as_array() != reference.as_array()))
        report.corners.append(res)
    return report
