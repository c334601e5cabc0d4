#!/usr/bin/env python3
"""Convert an IDX image/label pair (the MNIST file format) into a verigb dataset.

    python3 scripts/idx_to_dataset.py train-images-idx3-ubyte train-labels-idx1-ubyte \
        --limit 2000 --out mnist.csv

Pixels become integer features in 0..255, one per pixel, so trained models
can be verified with integer perturbations and counter-examples rendered with
``verigb render-ce --width 28 --height 28``. Gzipped files are read directly.
Optional class filtering keeps, e.g., a 2-vs-7 binary task.
"""

import argparse
import gzip
import struct
from fractions import Fraction

import numpy as np

from verigb.booster import Dataset, save_dataset
from verigb.model import FeatureKind, FeatureSpec


def read_idx(path: str) -> np.ndarray:
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "rb") as fh:
        zero, dtype, ndim = struct.unpack(">HBB", fh.read(4))
        if zero != 0 or dtype != 0x08:
            raise ValueError(f"{path}: not an unsigned-byte IDX file")
        shape = struct.unpack(">" + "I" * ndim, fh.read(4 * ndim))
        return np.frombuffer(fh.read(), dtype=np.uint8).reshape(shape)


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("images")
    p.add_argument("labels")
    p.add_argument("--out", required=True, help="CSV path; the schema goes next to it")
    p.add_argument("--limit", type=int, default=None, help="keep the first N rows (after filtering)")
    p.add_argument("--classes", type=int, nargs="*", default=None, help="keep only these digits, relabelled 0..k-1")
    args = p.parse_args()

    images = read_idx(args.images)
    labels = read_idx(args.labels)
    if len(images) != len(labels):
        raise SystemExit("image and label counts differ")
    keep = np.arange(len(labels)) if args.classes is None else np.nonzero(np.isin(labels, args.classes))[0]
    if args.limit is not None:
        keep = keep[: args.limit]
    classes = sorted(set(int(v) for v in labels[keep])) if args.classes is None else list(args.classes)
    index = {c: k for k, c in enumerate(classes)}

    h, w = images.shape[1:3]
    feats = tuple(
        FeatureSpec(i, FeatureKind.INTEGER, Fraction(0), Fraction(255), f"px_{i // w}_{i % w}") for i in range(h * w)
    )
    rows = [tuple(Fraction(int(v)) for v in images[k].reshape(-1)) for k in keep]
    targets = [index[int(labels[k])] for k in keep]
    data = Dataset(feats, rows, targets, "classification", tuple(str(c) for c in classes), "digit")
    save_dataset(data, args.out)
    print(f"{len(rows)} rows, {h}x{w} pixels, classes {classes} -> {args.out}")


if __name__ == "__main__":
    main()
