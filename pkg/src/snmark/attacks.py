"""Reproducible image attacks used to probe watermark robustness.

Every attack takes an 8-bit grayscale array and returns a new one of the same
shape. Stochastic attacks are pure functions of their seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy import ndimage
from scipy.fft import dctn, idctn

from .cs import SolverParams, cs_sample, tv_reconstruct
from .errors import ParameterError, ShapeError

# ITU-T T.81 Annex K luminance quantisation table.
LUMINANCE_QTABLE = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.float64,
)


def _to_u8(x: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(x), 0, 255).astype(np.uint8)


def _gray(image) -> np.ndarray:
    img = np.asarray(image)
    if img.ndim != 2:
        raise ShapeError(f"expected a 2-D grayscale image, got shape {img.shape}")
    return img.astype(np.float64)


def noise_sigma(target_psnr_db: float) -> float:
    """Noise standard deviation whose expected PSNR equals the target."""
    return 255.0 / 10.0 ** (target_psnr_db / 20.0)


def gaussian_noise_field(shape, target_psnr_db: float, seed: int) -> np.ndarray:
    if not 0 < target_psnr_db <= 60:
        raise ParameterError(f"target PSNR must be in (0, 60] dB, got {target_psnr_db}")
    return np.random.default_rng(seed).normal(0.0, noise_sigma(target_psnr_db), size=shape)


def gaussian_noise(image, target_psnr_db: float, seed: int) -> np.ndarray:
    img = _gray(image)
    return _to_u8(img + gaussian_noise_field(img.shape, target_psnr_db, seed))


def impulse_noise(image, density: float, seed: int) -> np.ndarray:
    """Salt-and-pepper noise on exactly ``round(density * M * N)`` pixels."""
    if not 0 <= density <= 1:
        raise ParameterError(f"impulse density must be in [0, 1], got {density}")
    img = np.asarray(image, dtype=np.uint8).copy()
    count = int(math.floor(density * img.size + 0.5))
    rng = np.random.default_rng(seed)
    where = rng.choice(img.size, size=count, replace=False)
    img.reshape(-1)[where] = rng.integers(0, 2, size=count, dtype=np.uint8) * 255
    return img


def jpeg_qtable(quality: int) -> np.ndarray:
    """Annex-K table scaled with the libjpeg quality rule, entries in [1, 255]."""
    if not 1 <= quality <= 100:
        raise ParameterError(f"JPEG quality must be in [1, 100], got {quality}")
    scale = 5000 / quality if quality < 50 else 200 - 2 * quality
    return np.clip(np.floor((LUMINANCE_QTABLE * scale + 50) / 100), 1, 255)


def jpeg_roundtrip(image, quality: int) -> np.ndarray:
    """Simplified baseline JPEG: 8x8 DCT, quantise, dequantise, inverse DCT."""
    img = _gray(image)
    q = jpeg_qtable(quality)
    M, N = img.shape
    pm, pn = -M % 8, -N % 8
    padded = np.pad(img, ((0, pm), (0, pn)), mode="edge") - 128.0
    H, W = padded.shape
    blocks = padded.reshape(H // 8, 8, W // 8, 8).transpose(0, 2, 1, 3)
    coef = dctn(blocks, type=2, norm="ortho", axes=(-2, -1))
    coef = np.rint(coef / q) * q
    out = idctn(coef, type=2, norm="ortho", axes=(-2, -1)).transpose(0, 2, 1, 3).reshape(H, W) + 128.0
    return _to_u8(out[:M, :N])


def _offset(fraction: float) -> int:
    if not 0 <= fraction <= 1:
        raise ParameterError(f"fraction must be in [0, 1], got {fraction}")
    return int(math.floor(fraction * 255 + 0.5))


def brighten(image, fraction: float) -> np.ndarray:
    """Add ``fraction * 255`` to every pixel, clipping at 255."""
    return np.clip(np.asarray(image, dtype=np.int64) + _offset(fraction), 0, 255).astype(np.uint8)


def darken(image, fraction: float) -> np.ndarray:
    return np.clip(np.asarray(image, dtype=np.int64) - _offset(fraction), 0, 255).astype(np.uint8)


def median_filter3(image) -> np.ndarray:
    img = np.asarray(image, dtype=np.uint8)
    if img.ndim != 2 or min(img.shape) < 3:
        raise ShapeError(f"median filter needs at least a 3x3 image, got {img.shape}")
    return ndimage.median_filter(img, size=3, mode="nearest")


def gaussian_kernel(sigma: float) -> np.ndarray:
    if not sigma > 0:
        raise ParameterError(f"blur sigma must be positive, got {sigma}")
    radius = max(1, math.ceil(3 * sigma))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


def gaussian_blur_float(image, sigma: float) -> np.ndarray:
    k = gaussian_kernel(sigma)
    out = ndimage.correlate1d(_gray(image), k, axis=0, mode="nearest")
    return ndimage.correlate1d(out, k, axis=1, mode="nearest")


def gaussian_blur(image, sigma: float) -> np.ndarray:
    return _to_u8(gaussian_blur_float(image, sigma))


def cs_attack(
    image,
    ratio: float,
    seed: int,
    params: SolverParams = SolverParams(),
    density: str = "variable",
) -> np.ndarray:
    """Sample DCT coefficients, reconstruct by TV minimisation, requantise to 8 bits."""
    meas = cs_sample(_gray(image), ratio, seed, density)
    return tv_reconstruct(meas, params).export()


# --------------------------------------------------------------------------
# One-line attack specifications, e.g. "gaussian:psnr=10.1167:seed=7"

_PARAMS: Dict[str, Dict[str, type]] = {
    "gaussian": {"psnr": float, "seed": int},
    "impulse": {"density": float, "seed": int},
    "jpeg": {"quality": int},
    "cs": {"ratio": float, "seed": int, "density": str},
    "brighten": {"fraction": float},
    "darken": {"fraction": float},
    "median": {"size": int},
    "blur": {"sigma": float},
}

_DEFAULTS: Dict[str, Dict[str, object]] = {
    "gaussian": {"psnr": 10.1167, "seed": 0},
    "impulse": {"density": 0.4, "seed": 0},
    "jpeg": {"quality": 10},
    "cs": {"ratio": 0.21, "seed": 0},
    "brighten": {"fraction": 0.8},
    "darken": {"fraction": 0.3},
    "median": {"size": 3},
    "blur": {"sigma": 1.0},
}

ATTACK_KINDS = tuple(_PARAMS)


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    params: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in _PARAMS:
            raise ParameterError(f"unknown attack {self.kind!r}; choose from {', '.join(ATTACK_KINDS)}")
        unknown = set(self.params) - set(_PARAMS[self.kind])
        if unknown:
            raise ParameterError(f"attack {self.kind!r} has no parameter(s) {', '.join(sorted(unknown))}")
        merged = dict(_DEFAULTS[self.kind])
        merged.update(self.params)
        object.__setattr__(self, "params", merged)
        if self.kind == "median" and merged["size"] != 3:
            raise ParameterError("only the 3x3 median filter is supported")

    @classmethod
    def parse(cls, text: str) -> "AttackSpec":
        kind, *items = text.strip().split(":")
        params: Dict[str, object] = {}
        types = _PARAMS.get(kind)
        if types is None:
            raise ParameterError(f"unknown attack {kind!r}; choose from {', '.join(ATTACK_KINDS)}")
        for item in items:
            name, sep, value = item.partition("=")
            if not sep or name not in types:
                raise ParameterError(f"bad parameter {item!r} for attack {kind!r}")
            try:
                params[name] = types[name](value)
            except ValueError:
                raise ParameterError(f"bad value {value!r} for {kind}:{name}") from None
        return cls(kind, params)

    def __str__(self) -> str:
        return ":".join([self.kind] + [f"{k}={v}" for k, v in self.params.items()])

    def apply(self, image, solver: Optional[SolverParams] = None) -> np.ndarray:
        p = self.params
        if self.kind == "gaussian":
            return gaussian_noise(image, p["psnr"], p["seed"])
        if self.kind == "impulse":
            return impulse_noise(image, p["density"], p["seed"])
        if self.kind == "jpeg":
            return jpeg_roundtrip(image, p["quality"])
        if self.kind == "cs":
            return cs_attack(image, p["ratio"], p["seed"], solver or SolverParams(),
                             p.get("density", "variable"))
        if self.kind == "brighten":
            return brighten(image, p["fraction"])
        if self.kind == "darken":
            return darken(image, p["fraction"])
        if self.kind == "median":
            return median_filter3(image)
        return gaussian_blur(image, p["sigma"])

