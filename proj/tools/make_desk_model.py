#!/usr/bin/env python3
"""Train the bundled desk-scale linear softmax models and export their test splits.

Writes, for each model directory:
  model.pixlw   PIXLW1 binary (magic, classes/channels/height/width as u32 LE,
                row-major f32 LE weights, then f32 LE biases)
  manifest.csv  id,path,label over the held-out split
  images/*.png  8-bit grayscale 8x8 digits

Images are quantized to 8 bits before training so the model sees exactly the
values the engine decodes from PNG.
"""
import argparse
import csv
import struct
from pathlib import Path

import numpy as np
from PIL import Image
from sklearn.datasets import load_digits
from sklearn.linear_model import LogisticRegression
from sklearn.model_selection import train_test_split


def write_pixlw(path, weights, bias, shape):
    classes = weights.shape[0]
    c, h, w = shape
    with open(path, "wb") as f:
        f.write(b"PIXLW1")
        f.write(struct.pack("<4I", classes, c, h, w))
        f.write(np.asarray(weights, dtype="<f4").tobytes(order="C"))
        f.write(np.asarray(bias, dtype="<f4").tobytes(order="C"))


def build(out, classes, c_reg, seed):
    digits = load_digits()
    mask = digits.target < classes
    raw = digits.images[mask]
    labels = digits.target[mask]
    quantized = np.clip(np.rint(raw / 16.0 * 255.0), 0, 255).astype(np.uint8)
    x = quantized.reshape(len(quantized), -1).astype(np.float64) / 255.0

    idx = np.arange(len(x))
    tr, te = train_test_split(idx, test_size=0.4, random_state=seed, stratify=labels)
    model = LogisticRegression(C=c_reg, max_iter=5000)
    model.fit(x[tr], labels[tr])
    w32 = model.coef_.astype(np.float32)
    b32 = model.intercept_.astype(np.float32)
    logits = x[te].astype(np.float32) @ w32.T + b32
    acc = float(np.mean(np.argmax(logits, axis=1) == labels[te]))

    out.mkdir(parents=True, exist_ok=True)
    (out / "images").mkdir(exist_ok=True)
    write_pixlw(out / "model.pixlw", w32, b32, (1, 8, 8))
    with open(out / "manifest.csv", "w", newline="") as f:
        wr = csv.writer(f, lineterminator="\n")
        wr.writerow(["id", "path", "label"])
        for i in te:
            name = f"d{i:04d}"
            Image.fromarray(quantized[i], mode="L").save(out / "images" / f"{name}.png")
            wr.writerow([name, f"images/{name}.png", int(labels[i])])
    print(f"{out}: classes={classes} test={len(te)} accuracy={acc:.4f}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data")
    ap.add_argument("--C", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    build(args.out / "digits10", 10, args.C, args.seed)
    build(args.out / "digits3", 3, args.C, args.seed)


if __name__ == "__main__":
    main()
