"""Plain (ASCII) PGM/PPM images for counter-example visualisation.

Feature vectors are laid out row-major; for RGB the three channel values of
a pixel are adjacent (``index = (row * width + col) * 3 + channel``).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .verdict import CounterExample


@dataclass(frozen=True)
class ImageSpec:
    width: int
    height: int
    channels: int = 1

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 (grayscale) or 3 (RGB)")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")

    @property
    def size(self) -> int:
        return self.width * self.height * self.channels

    @property
    def suffix(self) -> str:
        return ".pgm" if self.channels == 1 else ".ppm"


def to_pixels(values: Sequence, spec: ImageSpec) -> np.ndarray:
    """Round to the nearest integer and clip to 0..255; shape (h, w) or (h, w, 3)."""
    if len(values) != spec.size:
        raise ValueError(f"vector has {len(values)} values, image needs {spec.size}")
    arr = np.array([round(Fraction(v)) for v in values], dtype=np.int64)
    arr = np.clip(arr, 0, 255)
    shape = (spec.height, spec.width) if spec.channels == 1 else (spec.height, spec.width, 3)
    return arr.reshape(shape)


def write_pnm(pixels: np.ndarray, path) -> Path:
    path = Path(path)
    h, w = pixels.shape[:2]
    magic = "P2" if pixels.ndim == 2 else "P3"
    flat = pixels.reshape(h, -1)
    lines = [magic, f"{w} {h}", "255"]
    lines += [" ".join(str(int(v)) for v in row) for row in flat]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_pnm(path) -> np.ndarray:
    tokens = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0]
        tokens.extend(line.split())
    magic = tokens[0]
    if magic not in ("P2", "P3"):
        raise ValueError(f"{path}: only plain PGM (P2) and PPM (P3) are supported")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise ValueError(f"{path}: expected maxval 255, got {maxval}")
    data = np.array([int(t) for t in tokens[4:]], dtype=np.int64)
    if magic == "P2":
        return data.reshape(h, w)
    return data.reshape(h, w, 3)


def delta_pixels(x: Sequence, x_prime: Sequence, spec: ImageSpec) -> np.ndarray:
    """``x' - x`` shifted by 128 and clipped, so unchanged pixels are mid-grey."""
    diff = [round(Fraction(b) - Fraction(a)) + 128 for a, b in zip(x, x_prime)]
    return to_pixels(diff, spec)


def mask_pixels(x: Sequence, x_prime: Sequence, spec: ImageSpec) -> np.ndarray:
    """255 where a pixel (any channel for RGB) changed, 0 elsewhere."""
    changed = np.array([Fraction(a) != Fraction(b) for a, b in zip(x, x_prime)], dtype=bool)
    if spec.channels == 3:
        changed = changed.reshape(-1, 3).any(axis=1).repeat(3)
    return to_pixels(np.where(changed, 255, 0).tolist(), spec)


def render_counterexample(ce: CounterExample, spec: ImageSpec, out_dir, prefix: str = "ce") -> dict[str, Path]:
    """Write original, perturbed, delta and mask images; returns their paths."""
    if len(ce.x) != spec.size:
        raise ValueError(f"counter-example has {len(ce.x)} features, image spec needs {spec.size}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    images = {
        "original": to_pixels(ce.x, spec),
        "perturbed": to_pixels(ce.x_prime, spec),
        "delta": delta_pixels(ce.x, ce.x_prime, spec),
        "mask": mask_pixels(ce.x, ce.x_prime, spec),
    }
    return {name: write_pnm(px, out / f"{prefix}_{name}{spec.suffix}") for name, px in images.items()}
