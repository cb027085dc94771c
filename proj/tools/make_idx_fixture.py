#!/usr/bin/env python3
"""Write the small idx fixtures used by the loader tests.

Produces a well-formed 10-image 7x5 pair plus an expected-values JSON dump,
and a set of deliberately broken variants (bad magic, truncated payload,
image/label count mismatch).
"""

import json
import struct
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def write_images(path, images):
    n, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", 2051, n, rows, cols))
        fh.write(images.astype(np.uint8).tobytes())


def write_labels(path, labels):
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", 2049, len(labels)))
        fh.write(np.asarray(labels, dtype=np.uint8).tobytes())


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(7)
    images = rng.integers(0, 256, size=(10, 7, 5)).astype(np.uint8)
    labels = rng.integers(0, 10, size=10).astype(np.uint8)

    write_images(OUT / "tiny-images-idx3-ubyte", images)
    write_labels(OUT / "tiny-labels-idx1-ubyte", labels)
    with open(OUT / "tiny-expected.json", "w") as fh:
        json.dump({
            "count": 10, "rows": 7, "cols": 5,
            "pixels": images.reshape(10, -1).tolist(),
            "labels": labels.tolist(),
        }, fh, indent=1)

    # bad magic: images header claims the label magic
    with open(OUT / "bad-magic-idx3-ubyte", "wb") as fh:
        fh.write(struct.pack(">IIII", 2049, 10, 7, 5))
        fh.write(images.tobytes())

    # truncated: header promises 10 images, payload holds 3.5
    with open(OUT / "truncated-images-idx3-ubyte", "wb") as fh:
        fh.write(struct.pack(">IIII", 2051, 10, 7, 5))
        fh.write(images.tobytes()[: 7 * 5 * 3 + 17])

    # count mismatch: 10 images but 7 labels
    write_labels(OUT / "short-labels-idx1-ubyte", labels[:7])

    print("fixtures written to", OUT)


if __name__ == "__main__":
    main()
