"""Datasets: synthetic Gaussian-blob images and PPM/PGM directories."""

import csv
import os
from dataclasses import dataclass

import numpy as np

from . import fileio

SPLITS = ("train", "heldout", "attack")


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    images: np.ndarray  # (N, H, W, C) in [0, 255]
    labels: np.ndarray  # (N,) int
    splits: np.ndarray  # (N,) str, one of SPLITS
    num_classes: int
    names: list = None

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.splits = np.asarray(self.splits)
        if not (len(self.images) == len(self.labels) == len(self.splits)):
            raise DatasetError("images, labels and splits differ in length")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise DatasetError("label out of range")
        if self.names is None:
            self.names = [f"img_{i:05d}" for i in range(len(self.labels))]

    def __len__(self):
        return len(self.labels)

    @property
    def image_shape(self):
        return self.images.shape[1:]

    def indices(self, split):
        return np.flatnonzero(self.splits == split)

    def split(self, split):
        idx = self.indices(split)
        return self.images[idx], self.labels[idx]


def _assign_splits(n, fractions):
    # deterministic, interleaved so every split sees every class
    cuts = np.cumsum(fractions) / np.sum(fractions)
    pos = (np.arange(n) + 0.5) / n
    return np.array([SPLITS[int(np.searchsorted(cuts, p))] for p in pos])


def generate_synthetic_dataset(classes, per_class, image_side, seed=0, noise=16.0, amplitude=40.0,
                               channels=3, blobs=3, fractions=(0.5, 1 / 6, 1 / 3)):
    """Class-conditioned Gaussian-blob images.

    Each class owns a fixed layout of ``blobs`` coloured Gaussian spots drawn
    once from the seed. An image is mid-grey plus its class layout times
    ``amplitude`` and a random contrast in [0.8, 1.2], plus Gaussian pixel
    noise of std ``noise``, rounded and clipped to [0, 255]. Within each class the images are tagged
    train / heldout / attack in the proportions ``fractions``.
    """
    if classes < 2 or per_class < 1 or image_side < 8:
        raise DatasetError("need classes >= 2, per_class >= 1, image_side >= 8")
    rng = np.random.default_rng(seed)
    side = image_side
    yy, xx = np.mgrid[0:side, 0:side].astype(np.float64)
    templates = []
    for _ in range(classes):
        pattern = np.zeros((side, side, channels))
        for _ in range(blobs):
            cy, cx = rng.uniform(0.15 * side, 0.85 * side, size=2)
            width = rng.uniform(0.08, 0.18) * side
            colour = rng.uniform(-1.0, 1.0, size=channels)
            spot = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * width**2))
            pattern += spot[:, :, None] * colour
        templates.append(pattern)

    images, labels, splits = [], [], []
    tags = _assign_splits(per_class, fractions)
    for i in range(per_class):
        for c in range(classes):
            contrast = rng.uniform(0.8, 1.2)
            img = 128.0 + amplitude * contrast * templates[c]
            if noise > 0:
                img = img + noise * rng.standard_normal(img.shape)
            images.append(np.clip(np.rint(img), 0, 255) + 0.0)  # + 0.0 drops -0.0
            labels.append(c)
            splits.append(tags[i])
    return Dataset(np.stack(images), np.array(labels), np.array(splits), classes)


def write_dataset_dir(dataset, path):
    """Write images as PPM/PGM plus ``labels.csv`` (filename,label,split)."""
    os.makedirs(path, exist_ok=True)
    ext = ".ppm" if dataset.image_shape[-1] == 3 else ".pgm"
    rows = []
    for name, img, label, split in zip(dataset.names, dataset.images, dataset.labels, dataset.splits):
        fname = name + ext
        fileio.write_pnm(os.path.join(path, fname), img)
        rows.append((fname, int(label), str(split)))
    with open(os.path.join(path, "labels.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["filename", "label", "split"])
        w.writerows(rows)


def load_dataset_dir(path, num_classes=None):
    """Load PPM/PGM files listed in (or present next to) ``labels.csv``.

    The CSV has ``filename,label`` columns and an optional ``split`` column;
    images without a split are tagged ``attack``. Every image file in the
    directory must have a label row.
    """
    csv_path = os.path.join(path, "labels.csv")
    if not os.path.exists(csv_path):
        raise DatasetError(f"{csv_path}: missing labels file")
    with open(csv_path, newline="") as f:
        reader = csv.DictReader(f)
        if not reader.fieldnames or not {"filename", "label"} <= set(reader.fieldnames):
            raise DatasetError(f"{csv_path}: needs filename,label columns")
        rows = list(reader)
    table = {}
    for r in rows:
        try:
            table[r["filename"]] = (int(r["label"]), (r.get("split") or "attack").strip())
        except ValueError as e:
            raise DatasetError(f"{csv_path}: bad label for {r['filename']}") from e
    files = sorted(f for f in os.listdir(path) if f.lower().endswith((".ppm", ".pgm")))
    for fname in files:
        if fname not in table:
            raise DatasetError(f"{fname}: no label row in labels.csv")
    images, labels, splits, names = [], [], [], []
    for fname in files:
        try:
            img = fileio.read_pnm(os.path.join(path, fname))
        except (OSError, fileio.FormatError) as e:
            raise DatasetError(f"{fname}: unreadable ({e})") from e
        if images and img.shape != images[0].shape:
            raise DatasetError(f"{fname}: shape {img.shape} differs from {images[0].shape}")
        label, split = table[fname]
        if split not in SPLITS:
            raise DatasetError(f"{fname}: unknown split {split!r}")
        images.append(img)
        labels.append(label)
        splits.append(split)
        names.append(os.path.splitext(fname)[0])
    missing = set(table) - set(files)
    if missing:
        raise DatasetError(f"{sorted(missing)[0]}: listed in labels.csv but not found")
    if not images:
        raise DatasetError(f"{path}: no images")
    if num_classes is None:
        num_classes = max(labels) + 1
    for fname, label in zip(files, labels):
        if not 0 <= label < num_classes:
            raise DatasetError(f"{fname}: label {label} out of range")
    return Dataset(np.stack(images), np.array(labels), np.array(splits), num_classes, names)
