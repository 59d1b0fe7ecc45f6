#!/usr/bin/env python3
"""Convert a MATLAB hyperspectral scene into the native cube format.

Academic scenes (Indian Pines, Pavia University, ...) are usually
distributed as .mat files holding an H x W x B reflectance array plus an
H x W ground-truth array. This writes the sidecar/raw cube layout the CLI
reads:

    <out>.json        header {"magic":"HSTC1", ...}
    <out>.raw         band-sequential float32 little-endian planes
    <out>.labels.raw  H x W row-major uint16 little-endian, 0 = unlabeled

Usage:
    convert_mat.py scene.mat scene_gt.mat out_base [--data-key K] [--gt-key K]

Keys default to the largest numeric array found in each file.
"""

import argparse
import json
import sys

import numpy as np
import scipy.io


def largest_array(mat, forced_key=None):
    if forced_key is not None:
        return np.asarray(mat[forced_key])
    best = None
    for key, value in mat.items():
        if key.startswith("__"):
            continue
        arr = np.asarray(value)
        if arr.dtype.kind not in "iuf":
            continue
        if best is None or arr.size > best.size:
            best = arr
    if best is None:
        raise SystemExit("no numeric array found in .mat file")
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("data_mat")
    parser.add_argument("gt_mat")
    parser.add_argument("out_base")
    parser.add_argument("--data-key")
    parser.add_argument("--gt-key")
    args = parser.parse_args()

    cube = largest_array(scipy.io.loadmat(args.data_mat), args.data_key)
    labels = largest_array(scipy.io.loadmat(args.gt_mat), args.gt_key)
    if cube.ndim != 3:
        raise SystemExit(f"expected H x W x B cube, got shape {cube.shape}")
    h, w, b = cube.shape
    if labels.shape != (h, w):
        raise SystemExit(
            f"label grid {labels.shape} does not match cube plane {(h, w)}")

    header = {
        "magic": "HSTC1",
        "height": h,
        "width": w,
        "bands": b,
        "dtype": "f32",
        "order": "bsq",
        "endianness": "little",
    }
    with open(args.out_base + ".json", "w") as f:
        json.dump(header, f, indent=2)
        f.write("\n")

    # band-sequential: each band as one row-major H x W plane
    planes = np.ascontiguousarray(np.moveaxis(cube, 2, 0), dtype="<f4")
    planes.tofile(args.out_base + ".raw")

    labels.astype("<u2").tofile(args.out_base + ".labels.raw")
    print(f"wrote {args.out_base}.json/.raw/.labels.raw "
          f"({h}x{w}x{b}, {int((labels > 0).sum())} labeled pixels)",
          file=sys.stderr)


if __name__ == "__main__":
    main()
