import numpy as np
import pytest

from amlris.netpbm import ImageRGB, MaskBitmap


@pytest.fixture
def np_rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def gradient_image():
    """Deterministic 16x16 RGB fixture covering the full byte range."""
    y, x = np.mgrid[0:16, 0:16]
    px = np.stack([x * 17, y * 17, (x * 7 + y * 11) % 256], axis=-1)
    return ImageRGB(px.astype(np.uint8))


def mask_from_rows(rows):
    """Mask from rows given as digit strings ("0110") or int lists."""
    rows = [[int(ch) for ch in r] if isinstance(r, str) else r for r in rows]
    return MaskBitmap(np.array(rows, dtype=np.uint8))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
