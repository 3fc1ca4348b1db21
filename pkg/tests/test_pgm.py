import numpy as np
import pytest

from snmark.errors import ParseError, ShapeError
from snmark.pgm import decode_pgm, encode_pgm, image_to_logo, logo_to_image, read_image, write_image


def test_round_trip(tmp_path):
    img = np.random.default_rng(0).integers(0, 256, (13, 21), dtype=np.uint8)
    write_image(img, tmp_path / "a.pgm")
    np.testing.assert_array_equal(read_image(tmp_path / "a.pgm"), img)


def test_header_comments_and_whitespace():
    data = b"P5\n# made by hand\n3 2 # trailing\n255\n" + bytes(range(6))
    np.testing.assert_array_equal(decode_pgm(data), [[0, 1, 2], [3, 4, 5]])


def test_ascii_and_maxval_scaling():
    img = decode_pgm(b"P2\n2 2\n15\n0 15\n5 10\n")
    np.testing.assert_array_equal(img, [[0, 255], [85, 170]])


@pytest.mark.parametrize(
    "data",
    [b"", b"P6\n1 1\n255\n\x00", b"P5\n2 2\n255\n\x00", b"P5\n2 x\n255\n\x00\x00\x00\x00",
     b"P5\n2 2\n65535\n" + bytes(8), b"P2\n2 1\n10\n3\n", b"P2\n1 1\n10\n11\n"],
)
def test_malformed(data):
    with pytest.raises(ParseError):
        decode_pgm(data)


def test_encode_errors():
    with pytest.raises(ShapeError):
        encode_pgm(np.zeros((2, 2, 3), np.uint8))
    with pytest.raises(ShapeError):
        encode_pgm(np.full((2, 2), 300))


def test_logo_images():
    logo = np.array([[0, 1], [1, 0]])
    img = logo_to_image(logo)
    np.testing.assert_array_equal(img, [[0, 255], [255, 0]])
    np.testing.assert_array_equal(image_to_logo(img), logo)


def test_png_round_trip(tmp_path):
    pytest.importorskip("PIL")
    img = np.random.default_rng(1).integers(0, 256, (9, 7), dtype=np.uint8)
    write_image(img, tmp_path / "a.png")
    np.testing.assert_array_equal(read_image(tmp_path / "a.png"), img)
