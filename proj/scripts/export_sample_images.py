#!/usr/bin/env python3
"""Export scikit-image sample pictures as 8-bit PGM files.

The benchmark needs two disjoint sets of natural grayscale images: one to
learn filters from and one to denoise. The classic test set is not
redistributable, so the bundled scikit-image samples stand in for it.
"""
import argparse
import pathlib

import numpy as np
from skimage import color, data

TEST = {
    "cameraman": data.camera,
    "astronaut": data.astronaut,
    "brick": data.brick,
}
TRAIN = {
    "moon": data.moon,
    "coffee": data.coffee,
    "rocket": data.rocket,
}


def to_gray_u8(img):
    if img.ndim == 3:
        img = color.rgb2gray(img[..., :3]) * 255.0
    return np.clip(np.round(img), 0, 255).astype(np.uint8)


def write_pgm(path, img):
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(img.tobytes())


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data", help="output directory")
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    for sub, group in (("test", TEST), ("train", TRAIN)):
        (out / sub).mkdir(parents=True, exist_ok=True)
        for name, loader in group.items():
            img = to_gray_u8(loader())
            write_pgm(out / sub / f"{name}.pgm", img)
            print(f"{sub}/{name}.pgm {img.shape[1]}x{img.shape[0]}")


if __name__ == "__main__":
    main()
