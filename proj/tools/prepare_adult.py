#!/usr/bin/env python3
"""Binarize the UCI Adult census file into 123-dimensional BBM datasets.

Categorical columns are one-hot encoded (a missing value '?' leaves its group
all zero); continuous columns are cut into a few bins, one bit per bin:

    age            <=25, 26-32, 33-40, 41-49, >=50
    fnlwgt         quintiles of the input file
    education-num  <=8, 9, 10, 11-12, >=13
    capital-gain   zero / non-zero
    capital-loss   zero / non-zero
    hours-per-week <=34, 35-39, 40, 41-49, >=50

The 32561 rows of adult.data are shuffled with a fixed seed and split into
5000 train, 1414 valid and 26147 test rows.

usage: prepare_adult.py --raw path/to/adult.data --out data/adult
"""

import argparse
import pathlib
import struct

import numpy as np
import pandas as pd

COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num", "marital-status",
    "occupation", "relationship", "race", "sex", "capital-gain", "capital-loss",
    "hours-per-week", "native-country", "income",
]
EXPECTED_CATEGORIES = {
    "workclass": 8, "education": 16, "marital-status": 7, "occupation": 14,
    "relationship": 6, "race": 5, "sex": 2, "native-country": 41,
}
SPLITS = (("train", 5000), ("valid", 1414), ("test", 26147))
SEED = 1234


def bins(values, edges):
    """Index of the bin for each value; edges are inclusive upper bounds."""
    return np.searchsorted(np.asarray(edges), values, side="left")


def one_hot(index, width):
    out = np.zeros((len(index), width), dtype=np.uint8)
    out[np.arange(len(index)), index] = 1
    return out


def binarize(frame):
    blocks = []
    blocks.append(one_hot(bins(frame["age"], [25, 32, 40, 49]), 5))
    blocks.append(categorical(frame, "workclass"))
    quintiles = np.quantile(frame["fnlwgt"], [0.2, 0.4, 0.6, 0.8])
    blocks.append(one_hot(bins(frame["fnlwgt"], quintiles), 5))
    blocks.append(categorical(frame, "education"))
    blocks.append(one_hot(bins(frame["education-num"], [8, 9, 10, 12]), 5))
    for col in ("marital-status", "occupation", "relationship", "race", "sex"):
        blocks.append(categorical(frame, col))
    blocks.append(one_hot((frame["capital-gain"] > 0).astype(int).to_numpy(), 2))
    blocks.append(one_hot((frame["capital-loss"] > 0).astype(int).to_numpy(), 2))
    blocks.append(one_hot(bins(frame["hours-per-week"], [34, 39, 40, 49]), 5))
    blocks.append(categorical(frame, "native-country"))
    return np.hstack(blocks)


def categorical(frame, col):
    levels = sorted(v for v in frame[col].unique() if v != "?")
    if len(levels) != EXPECTED_CATEGORIES[col]:
        raise SystemExit(f"{col}: expected {EXPECTED_CATEGORIES[col]} categories, found {len(levels)}")
    out = np.zeros((len(frame), len(levels)), dtype=np.uint8)
    lookup = {v: i for i, v in enumerate(levels)}
    for row, value in enumerate(frame[col]):
        if value in lookup:
            out[row, lookup[value]] = 1
    return out


def write_bbm(path, bits):
    rows, cols = bits.shape
    packed = np.packbits(bits, axis=1, bitorder="little")
    with open(path, "wb") as f:
        f.write(b"BIHMDATA")
        f.write(struct.pack("<III", 1, rows, cols))
        f.write(packed.tobytes())


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--raw", required=True, type=pathlib.Path, help="adult.data")
    parser.add_argument("--out", required=True, type=pathlib.Path, help="output directory")
    args = parser.parse_args()

    frame = pd.read_csv(args.raw, names=COLUMNS, skipinitialspace=True)
    frame = frame.dropna(subset=["income"]).reset_index(drop=True)
    bits = binarize(frame)
    if bits.shape[1] != 123:
        raise SystemExit(f"expected 123 columns, got {bits.shape[1]}")

    order = np.random.RandomState(SEED).permutation(len(bits))
    if len(order) != sum(n for _, n in SPLITS):
        raise SystemExit(f"expected {sum(n for _, n in SPLITS)} rows, got {len(order)}")
    args.out.mkdir(parents=True, exist_ok=True)
    start = 0
    for name, count in SPLITS:
        write_bbm(args.out / f"{name}.bbm", bits[order[start:start + count]])
        print(f"{name}: {count} rows x {bits.shape[1]} bits")
        start += count


if __name__ == "__main__":
    main()
