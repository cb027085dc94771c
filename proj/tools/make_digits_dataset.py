#!/usr/bin/env python3
"""Build the bundled digit corpus in idx format.

Derives 28x28 grayscale digit images from scikit-learn's bundled 8x8
handwritten digits (1797 base samples): each output image is a base digit
upscaled with a small random rotation/scale/shift.  Train and test draw from
disjoint base-sample pools so no base digit appears on both sides.  Fully
deterministic for a fixed seed.

Usage: make_digits_dataset.py [--out DIR] [--train N] [--test N] [--seed S]
"""

import argparse
import struct
from pathlib import Path

import numpy as np
from scipy import ndimage
from sklearn.datasets import load_digits

OUT_SIZE = 28
BASE_SIZE = 8


def write_idx_images(path: Path, images: np.ndarray) -> None:
    assert images.dtype == np.uint8 and images.ndim == 3
    n, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", 2051, n, rows, cols))
        fh.write(images.tobytes())


def write_idx_labels(path: Path, labels: np.ndarray) -> None:
    assert labels.ndim == 1
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", 2049, len(labels)))
        fh.write(labels.astype(np.uint8).tobytes())


def render(base: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Upscale an 8x8 digit to 28x28 with mild random affine jitter."""
    angle = rng.uniform(-12.0, 12.0) * np.pi / 180.0
    scale = rng.uniform(0.95, 1.12)
    shift = rng.uniform(-1.5, 1.5, size=2)

    zoom = (OUT_SIZE / BASE_SIZE) * scale
    c, s = np.cos(-angle), np.sin(-angle)
    matrix = np.array([[c, -s], [s, c]]) / zoom
    center_out = np.array([(OUT_SIZE - 1) / 2.0] * 2)
    center_in = np.array([(BASE_SIZE - 1) / 2.0] * 2)
    offset = center_in - matrix @ center_out + shift / zoom

    img = ndimage.affine_transform(
        base, matrix, offset=offset, output_shape=(OUT_SIZE, OUT_SIZE),
        order=1, mode="constant", cval=0.0)
    img = np.clip(img * (255.0 / 16.0), 0.0, 255.0)
    return img.astype(np.uint8)


def generate(pool_images, pool_labels, count, rng):
    images = np.empty((count, OUT_SIZE, OUT_SIZE), dtype=np.uint8)
    labels = np.empty(count, dtype=np.uint8)
    picks = rng.integers(0, len(pool_images), size=count)
    for i, p in enumerate(picks):
        images[i] = render(pool_images[p], rng)
        labels[i] = pool_labels[p]
    return images, labels


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data")
    ap.add_argument("--train", type=int, default=5000)
    ap.add_argument("--test", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=20260822)
    args = ap.parse_args()

    digits = load_digits()
    base = digits.images.astype(np.float64)  # values 0..16
    labels = digits.target

    # disjoint base pools: every fifth base sample is reserved for test
    idx = np.arange(len(base))
    test_pool = idx % 5 == 0
    train_pool = ~test_pool

    rng = np.random.default_rng(args.seed)
    train_x, train_y = generate(base[train_pool], labels[train_pool],
                                args.train, rng)
    test_x, test_y = generate(base[test_pool], labels[test_pool],
                              args.test, rng)

    args.out.mkdir(parents=True, exist_ok=True)
    write_idx_images(args.out / "digits-train-images-idx3-ubyte", train_x)
    write_idx_labels(args.out / "digits-train-labels-idx1-ubyte", train_y)
    write_idx_images(args.out / "digits-test-images-idx3-ubyte", test_x)
    write_idx_labels(args.out / "digits-test-labels-idx1-ubyte", test_y)

    for split, y in (("train", train_y), ("test", test_y)):
        counts = np.bincount(y, minlength=10)
        print(f"{split}: {len(y)} samples, class counts {counts.tolist()}")


if __name__ == "__main__":
    main()
