#!/usr/bin/env python3
"""Build MNIST-style IDX files from the digits shipped in the npm `mnist` package.

The package (mnist@1.1.0) stores 10,000 MNIST digits as JSON, pixel/255
rounded to 3 decimals, one file per class. round(v * 255) restores the bytes.

    npm pack mnist@1.1.0 && tar xzf mnist-1.1.0.tgz
    python3 scripts/mnist_from_npm.py package/src/digits data/mnist

Writes train-*/t10k-* files after a seeded shuffle: the first
`--train` images go to the training files, the rest to the test files.
"""

import argparse
import json
import pathlib
import random
import struct


def load_digits(digits_dir):
    samples = []
    for label in range(10):
        data = json.loads((digits_dir / f"{label}.json").read_text())["data"]
        if len(data) % 784:
            raise SystemExit(f"{label}.json: {len(data)} values is not a multiple of 784")
        for k in range(len(data) // 784):
            pixels = bytes(min(255, max(0, round(v * 255))) for v in data[k * 784:(k + 1) * 784])
            samples.append((pixels, label))
    return samples


def write_idx(out_dir, prefix, samples):
    with open(out_dir / f"{prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(samples), 28, 28))
        for pixels, _ in samples:
            f.write(pixels)
    with open(out_dir / f"{prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(samples)))
        f.write(bytes(label for _, label in samples))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("digits_dir", type=pathlib.Path)
    ap.add_argument("out_dir", type=pathlib.Path)
    ap.add_argument("--train", type=int, default=8000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    samples = load_digits(args.digits_dir)
    random.Random(args.seed).shuffle(samples)
    if not 0 < args.train < len(samples):
        raise SystemExit(f"--train must be in (0, {len(samples)})")
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_idx(args.out_dir, "train", samples[:args.train])
    write_idx(args.out_dir, "t10k", samples[args.train:])
    print(f"{args.train} train / {len(samples) - args.train} test images -> {args.out_dir}")


if __name__ == "__main__":
    main()
