import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snmark.errors import ShapeError
from snmark.metrics import bit_error_rate, format_psnr, mse, psnr, quality_report


def test_identical_is_infinite():
    a = np.arange(64, dtype=np.uint8).reshape(8, 8)
    assert psnr(a, a) == math.inf
    assert format_psnr(psnr(a, a)) == "inf"
    assert quality_report(a, a).to_dict()["psnr_db"] == "inf"


def test_constant_offset_closed_form():
    a = np.full((16, 16), 100, np.uint8)
    b = a + 16
    assert mse(a, b) == 256.0
    assert psnr(a, b) == pytest.approx(10 * math.log10(255**2 / 256), abs=1e-9)
    assert abs(psnr(a, b) - 24.0490) <= 0.001


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        psnr(np.zeros((2, 2)), np.zeros((2, 3)))
    with pytest.raises(ShapeError):
        bit_error_rate(np.zeros((8, 16)), np.zeros((16, 8)))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_psnr_symmetric(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.integers(0, 256, (2, 10, 10))
    assert psnr(a, b) == psnr(b, a)


def test_psnr_monotone_in_offset():
    a = np.full((8, 8), 50, np.int64)
    values = [psnr(a, a + d) for d in range(1, 150)]
    assert all(x > y for x, y in zip(values, values[1:]))


def test_bit_error_rate_cases():
    ref = np.random.default_rng(0).integers(0, 2, (8, 16))
    assert bit_error_rate(ref, ref) == 0
    assert bit_error_rate(1 - ref, ref) == 1
    one = ref.copy()
    one[3, 7] ^= 1
    assert bit_error_rate(one, ref) == 1 / 128


def test_quality_report():
    a = np.zeros((4, 4))
    r = quality_report(a, a + 1, np.ones((2, 2)), np.zeros((2, 2)))
    assert r.mse == 1 and r.logo_bit_error_rate == 1
    assert r.psnr_db == pytest.approx(20 * math.log10(255))
