"""Regenerate the perturbation fixture and golden files.

Run from the repository root:  python3 tests/data/make_goldens.py
Goldens are frozen; regenerate only when a perturbation is deliberately
changed, and review the diff.
"""

from pathlib import Path

import numpy as np

from amlris.netpbm import ImageRGB, write_ppm
from amlris.perturb import PerturbKind, perturb

HERE = Path(__file__).parent
SEED = 42


def fixture_image() -> ImageRGB:
    y, x = np.mgrid[0:16, 0:16]
    px = np.stack([x * 17, y * 17, (7 * x + 11 * y) % 256], axis=-1)
    return ImageRGB(px.astype(np.uint8))


def main():
    img = fixture_image()
    write_ppm(img, HERE / "fixture16.ppm")
    for kind in PerturbKind:
        out = perturb(img, kind, SEED if kind.stochastic else None)
        write_ppm(out, HERE / "golden" / f"fixture16_{kind.value}.ppm")


if __name__ == "__main__":
    main()
