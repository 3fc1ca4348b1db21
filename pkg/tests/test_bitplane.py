import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snmark.bitplane import (
    WatermarkKey,
    embed,
    extract,
    generate_key,
    load_key,
    save_key,
    split_layers,
)
from snmark.errors import ParseError, ShapeError, WatermarkKeyError
from snmark.metrics import psnr
from snmark.serial import LogoSpec, SerialNumber, parse_serial_hex, serial_to_logo, tile_logo

SMALL = LogoSpec(2, 2, 4, 8)


def test_key_determinism():
    a = generate_key(42, 4, [2, 3, 4, 5])
    b = generate_key(42, 4, [2, 3, 4, 5])
    assert a == b
    np.testing.assert_array_equal(a.random_matrix(), b.random_matrix())


def test_default_key_matches_paper_layout():
    key = generate_key(7)
    assert key.thresholds == (0.0, 0.25, 0.5, 0.75, 1.0)
    assert key.planes == (2, 3, 4, 5)


def test_single_layer_key():
    key = generate_key(7, 1)
    assert key.thresholds == (0.0, 1.0)
    assert key.layer_count == 1


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(layer_count=4, planes=[2, 3, 3, 5]),
        dict(layer_count=4, planes=[2, 3, 4, 8]),
        dict(layer_count=4, planes=[-1, 3, 4, 5]),
        dict(layer_count=9),
        dict(layer_count=0),
        dict(layer_count=2, planes=[1, 2], thresholds=[0, 0.7, 0.6]),
        dict(layer_count=2, planes=[1, 2], thresholds=[0.1, 0.5, 1]),
    ],
)
def test_key_errors(kwargs):
    with pytest.raises(WatermarkKeyError):
        generate_key(1, **kwargs)


def test_random_matrix_uniform():
    r = generate_key(42).random_matrix()
    assert r.min() >= 0 and r.max() < 1
    assert abs(r.mean() - 0.5) < 0.005


def test_key_file_round_trip(tmp_path):
    key = generate_key(2**63 + 5, 3, [1, 4, 6], LogoSpec(4, 2, 8, 4), (300, 200),
                       thresholds=[0, 0.1, 1 / 3, 1])
    path = tmp_path / "k.txt"
    save_key(key, path)
    assert load_key(path) == key


@pytest.mark.parametrize(
    "text",
    [
        "seed=1\n",
        "generator=other\nseed=1\nlayers=1\nthresholds=0,1\nplanes=3\nlogo=8x8,4x8\nimage=64x128\n",
        "generator=numpy-pcg64\nseed=x\nlayers=1\nthresholds=0,1\nplanes=3\nlogo=8x8,4x8\nimage=64x128\n",
        "generator=numpy-pcg64\nseed=1\nlayers=2\nthresholds=0,1\nplanes=3\nlogo=8x8,4x8\nimage=64x128\n",
        "generator=numpy-pcg64\nseed 1\n",
    ],
)
def test_key_file_errors(text):
    with pytest.raises((ParseError, WatermarkKeyError)):
        WatermarkKey.from_text(text)


def test_split_single_layer_is_identity(tiled512):
    ls = split_layers(tiled512, generate_key(3, 1, [4]))
    assert len(ls.layers) == 1
    np.testing.assert_array_equal(ls.layers[0], tiled512.pixels)


def test_split_partition(tiled512, key512):
    ls = split_layers(tiled512, key512)
    np.testing.assert_array_equal(ls.total(), tiled512.pixels)
    support = sum((layer != 0).astype(int) for layer in ls.layers)
    assert support.max() <= 1


def test_layer_fractions(key512):
    counts = np.bincount(key512.layer_map().ravel(), minlength=4) / key512.layer_map().size
    assert np.all(np.abs(counts - 0.25) <= 0.01)


def test_layer_intervals_half_open():
    key = generate_key(11, 4)
    r = key.random_matrix()
    lm = key.layer_map()
    t = key.thresholds
    for k in range(4):
        sel = r[lm == k]
        assert sel.min() >= t[k] and sel.max() < t[k + 1]


def test_split_shape_mismatch(tiled512):
    with pytest.raises(ShapeError):
        split_layers(tiled512, generate_key(1, shape=(512, 511)))


def test_embed_fixed_point(tiled512, key512):
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (512, 512)).astype(np.uint8)
    once = embed(img, tiled512, key512)
    np.testing.assert_array_equal(embed(once, tiled512, key512), once)


def test_embed_locality_and_bound(tiled512, key512):
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, (512, 512)).astype(np.uint8)
    out = embed(img, tiled512, key512)
    diff = out.astype(int) - img.astype(int)
    mask = tiled512.footprint_mask()
    assert not diff[~mask].any()
    assert np.abs(diff).max() <= 2 ** max(key512.planes)
    # at most one bit plane differs per pixel, and only the keyed one
    changed = img ^ out
    assert np.all((changed == 0) | (changed == (1 << key512.plane_map()).astype(np.uint8)))


def test_embed_rejects_wrong_shape(tiled512, key512):
    with pytest.raises(ShapeError):
        embed(np.zeros((512, 500), np.uint8), tiled512, key512)
    with pytest.raises(ShapeError):
        embed(np.zeros((512, 512, 3), np.uint8), tiled512, key512)


def _expected_embed_mse(planes, footprint_fraction):
    """Brute force over every 8-bit value and target bit."""
    per_plane = []
    for p in planes:
        sq = []
        for x in range(256):
            for bit in (0, 1):
                y = (x | (1 << p)) if bit else (x & ~(1 << p))
                sq.append((y - x) ** 2)
        per_plane.append(np.mean(sq))
    return footprint_fraction * np.mean(per_plane)


def test_embed_distortion_oracle(tiled512, key512):
    fraction = tiled512.footprint_mask().mean()
    expected = _expected_embed_mse(key512.planes, fraction)
    assert fraction == pytest.approx(0.03125)
    assert expected == pytest.approx(0.03125 * 170)
    rng = np.random.default_rng(2)
    img = rng.integers(0, 256, (512, 512)).astype(np.uint8)
    out = embed(img, tiled512, key512)
    mse = np.mean((out.astype(float) - img) ** 2)
    assert mse == pytest.approx(expected, rel=0.1)
    assert 10 * math.log10(255**2 / expected) >= 38


def test_embed_psnr_natural(camera, tiled512, key512):
    assert psnr(camera, embed(camera, tiled512, key512)) >= 38


def test_round_trip(camera, paper_sn, tiled512, key512):
    rep = extract(embed(camera, tiled512, key512), key512, reference=paper_sn)
    assert rep.candidates == [paper_sn] * 4
    assert [c.logo_errors for c in rep.corners] == [0] * 4
    assert [c.sn_bit_errors for c in rep.corners] == [0] * 4


def test_all_zero_image(key512):
    rep = extract(np.zeros((512, 512), np.uint8), key512)
    assert [c.candidate.hex for c in rep.corners] == ["00000000"] * 4


def _random_cover_marked(seed):
    rng = np.random.default_rng(seed)
    img = rng.integers(0, 256, (512, 512)).astype(np.uint8)
    sn = parse_serial_hex("4CF9DFCA")
    return embed(img, tile_logo(serial_to_logo(sn), 512, 512), generate_key(42)), sn


def test_wrong_seed_error_rate():
    # same plane set: a pixel reads its true plane with probability 1/4, else a fair coin
    marked, sn = _random_cover_marked(5)
    rep = extract(marked, generate_key(43), reference=sn)
    for c in rep.corners:
        assert abs(c.logo_errors / c.logo.size - 0.375) <= 0.03


def test_disjoint_planes_error_rate():
    marked, sn = _random_cover_marked(6)
    rep = extract(marked, generate_key(42, planes=[0, 1, 6, 7]), reference=sn)
    for c in rep.corners:
        assert abs(c.logo_errors / c.logo.size - 0.5) <= 0.03
        assert c.candidate != sn


def test_extract_spec_override():
    key = generate_key(9, logo_spec=SMALL, shape=(64, 64))
    sn = parse_serial_hex("4CF9DFCA")
    marked = embed(np.full((64, 64), 77, np.uint8), tile_logo(serial_to_logo(sn, SMALL), 64, 64), key)
    rep = extract(marked, generate_key(9, shape=(64, 64)), spec=SMALL)
    assert rep.candidates == [sn] * 4


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**64 - 1),
    value=st.integers(0, 2**32 - 1),
    cover_seed=st.integers(0, 2**32 - 1),
    planes=st.lists(st.integers(0, 7), min_size=1, max_size=8, unique=True),
)
def test_perfect_recovery_property(seed, value, cover_seed, planes):
    sn = SerialNumber.from_int(value)
    key = generate_key(seed, len(planes), planes, SMALL, (20, 40))
    cover = np.random.default_rng(cover_seed).integers(0, 256, (20, 40)).astype(np.uint8)
    tiled = tile_logo(serial_to_logo(sn, SMALL), 20, 40)
    rep = extract(embed(cover, tiled, key), key, reference=sn)
    assert rep.candidates == [sn] * 4
    assert all(c.logo_errors == 0 for c in rep.corners)
