"""PSNR and logo bit-error measurements."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ShapeError

PEAK = 255.0
# Identical images: PSNR is reported as this value, rendered "inf" in reports.
PSNR_INFINITE = math.inf


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def psnr_from_mse(err: float) -> float:
    if err == 0:
        return PSNR_INFINITE
    return 10.0 * math.log10(PEAK**2 / err)


def psnr(a, b) -> float:
    return psnr_from_mse(mse(a, b))


def format_psnr(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.4f}"


def bit_error_rate(extracted, reference) -> float:
    """Fraction of mismatched pixels between two binary logos."""
    e = np.asarray(extracted)
    r = np.asarray(reference)
    if e.shape != r.shape:
        raise ShapeError(f"logo shape mismatch: {e.shape} vs {r.shape}")
    return float(np.count_nonzero((e != 0) != (r != 0))) / e.size


@dataclass
class QualityReport:
    psnr_db: float
    mse: float
    logo_bit_error_rate: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "psnr_db": format_psnr(self.psnr_db),
            "mse": self.mse,
            "logo_bit_error_rate": self.logo_bit_error_rate,
        }


def quality_report(a, b, extracted=None, reference=None) -> QualityReport:
    err = mse(a, b)
    ber = None
    if extracted is not None and reference is not None:
        ber = bit_error_rate(extracted, reference)
    return QualityReport(psnr_from_mse(err), err, ber)
