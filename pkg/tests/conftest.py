import numpy as np
import pytest

from snmark import generate_key, parse_serial_hex, serial_to_logo, tile_logo

_ACCEPTANCE = []


def record(criterion, ok, detail=""):
    _ACCEPTANCE.append((criterion, bool(ok), detail))
    return ok


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")


@pytest.fixture(scope="session")
def camera():
    data = pytest.importorskip("skimage.data")
    return data.camera()


@pytest.fixture(scope="session")
def moon():
    data = pytest.importorskip("skimage.data")
    return data.moon()


@pytest.fixture(scope="session")
def camera256(camera):
    """Cameraman downsampled by 2x2 block averaging."""
    return np.rint(camera.reshape(256, 2, 256, 2).mean(axis=(1, 3))).astype(np.uint8)


@pytest.fixture
def paper_sn():
    return parse_serial_hex("4CF9DFCA")


@pytest.fixture
def key512():
    return generate_key(42)


@pytest.fixture
def tiled512(paper_sn):
    return tile_logo(serial_to_logo(paper_sn), 512, 512)


@pytest.fixture
def acceptance():
    """Record one criterion outcome for the end-of-run summary."""
    return record
