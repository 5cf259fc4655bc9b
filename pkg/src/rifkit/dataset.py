"""Embedded binary-classification datasets: loading, saving and synthesis."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from .rng import Stream

MAGIC = b"RIFD1"
FORMATS = ("csv", "binary")


class DatasetError(ValueError):
    """Raised for malformed dataset files or invalid dataset contents."""


def _frozen(a, ndim: int) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True)
    if ndim == 2 and arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 0)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Training rows plus a held-out test set.

    ``binary=False`` admits real-valued responses for the least-squares
    family; every loader and classification experiment keeps the default.
    """

    features: np.ndarray
    labels: np.ndarray
    test_features: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    test_labels: np.ndarray = field(default_factory=lambda: np.zeros(0))
    name: str = "dataset"
    binary: bool = True

    def __post_init__(self):
        X = _frozen(self.features, 2)
        y = _frozen(self.labels, 1)
        Xt = _frozen(self.test_features, 2)
        yt = _frozen(self.test_labels, 1)
        if X.ndim != 2:
            raise DatasetError("features must be a 2-d matrix")
        if Xt.size == 0:
            Xt = np.zeros((0, X.shape[1]))
            Xt.setflags(write=False)
        n, d = X.shape
        if n < 2 or d < 1:
            raise DatasetError(f"need n >= 2 and d >= 1, got n={n}, d={d}")
        if y.shape != (n,):
            raise DatasetError(f"labels have shape {y.shape}, expected ({n},)")
        if Xt.ndim != 2 or Xt.shape[1] != d:
            raise DatasetError(f"test features have {Xt.shape[1]} columns, expected {d}")
        if yt.shape != (Xt.shape[0],):
            raise DatasetError("test labels do not match test features")
        for arr, what in ((X, "features"), (y, "labels"), (Xt, "test features"), (yt, "test labels")):
            if not np.all(np.isfinite(arr)):
                raise DatasetError(f"non-finite entry in {what}")
        if self.binary:
            for arr, what in ((y, "labels"), (yt, "test labels")):
                bad = np.flatnonzero((arr != 0.0) & (arr != 1.0))
                if bad.size:
                    raise DatasetError(f"{what}[{bad[0]}] = {arr[bad[0]]!r} is not 0 or 1")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "test_features", Xt)
        object.__setattr__(self, "test_labels", yt)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def m(self) -> int:
        return self.test_features.shape[0]

    def fingerprint(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        for arr in (self.features, self.labels, self.test_features, self.test_labels):
            h.update(struct.pack("<QQ", *(arr.shape + (1,))[:2]))
            h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return h.hexdigest()

    def subset(self, indices, name: Optional[str] = None) -> "Dataset":
        """Training rows ``indices`` (in the given order); test set unchanged."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.test_features,
                       self.test_labels, name or self.name, self.binary)

    def with_rows(self, features, labels) -> "Dataset":
        """Copy with extra training rows appended at the end."""
        X = np.vstack([self.features, np.atleast_2d(features)])
        y = np.concatenate([self.labels, np.atleast_1d(labels).astype(np.float64)])
        return Dataset(X, y, self.test_features, self.test_labels, self.name, self.binary)


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    d: int
    design: str = "gaussian-isotropic"
    spectrum: Optional[Sequence[float]] = None
    label_model: str = "logistic"
    theta_star: Optional[Sequence[float]] = None
    # norm of theta_star when it is drawn rather than given
    signal: float = 1.0
    noise: float = 0.0
    seed: int = 0
    test_fraction: float = 0.2
    name: str = "synthetic"

    def validate(self):
        if self.n < 2 or self.d < 1:
            raise DatasetError(f"need n >= 2 and d >= 1, got n={self.n}, d={self.d}")
        if self.design not in ("gaussian-isotropic", "gaussian-anisotropic"):
            raise DatasetError(f"unknown design {self.design!r}")
        if self.design == "gaussian-anisotropic":
            if self.spectrum is None or len(self.spectrum) != self.d or min(self.spectrum) < 0:
                raise DatasetError("anisotropic design needs d nonnegative spectrum values")
        if self.label_model not in ("logistic", "linear"):
            raise DatasetError(f"unknown label model {self.label_model!r}")
        if self.theta_star is not None and len(self.theta_star) != self.d:
            raise DatasetError("theta_star must have length d")
        if self.noise < 0 or self.signal < 0:
            raise DatasetError("noise and signal must be nonnegative")
        if not 0 <= self.test_fraction < 1:
            raise DatasetError("test_fraction must lie in [0, 1)")
        if self.n - _round_half_up(self.n * self.test_fraction) < 2:
            raise DatasetError("split leaves fewer than 2 training rows")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def true_parameter(spec: SyntheticSpec) -> np.ndarray:
    if spec.theta_star is not None:
        return np.asarray(spec.theta_star, dtype=np.float64)
    direction = Stream(spec.seed, "theta_star").normal(spec.d)
    norm = np.linalg.norm(direction)
    return direction * (spec.signal / norm) if norm > 0 else direction


def synthesize(spec: SyntheticSpec) -> Dataset:
    """Draw a dataset from ``spec``; the result depends only on ``spec``.

    Rows are split unstratified: a random ``test_fraction`` of rows (rounded
    half up) becomes the test set, both parts keep generation order.
    """
    spec.validate()
    X = Stream(spec.seed, "features").normal((spec.n, spec.d))
    if spec.design == "gaussian-anisotropic":
        X = X * np.sqrt(np.asarray(spec.spectrum, dtype=np.float64))
    theta = true_parameter(spec)
    margin = X @ theta
    if spec.label_model == "logistic":
        u = Stream(spec.seed, "labels").uniform(spec.n)
        y = (u < expit(margin)).astype(np.float64)
    else:
        y = margin + spec.noise * Stream(spec.seed, "labels").normal(spec.n)
    perm = Stream(spec.seed, "split").permutation(spec.n)
    n_test = _round_half_up(spec.n * spec.test_fraction)
    test = np.sort(perm[:n_test])
    train = np.sort(perm[n_test:])
    return Dataset(X[train], y[train], X[test], y[test], spec.name,
                   binary=spec.label_model == "logistic")


def standardize(data: Dataset) -> Dataset:
    """Center and scale columns with training statistics (explicit opt-in)."""
    mu = data.features.mean(axis=0)
    sd = data.features.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return Dataset((data.features - mu) / sd, data.labels, (data.test_features - mu) / sd,
                   data.test_labels, data.name, data.binary)


# ---------------------------------------------------------------- file formats

def _parse_label(cell: str, row: int, binary: bool, signed: bool) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DatasetError(f"row {row}: label {cell!r} is not numeric") from None
    if signed:
        if value not in (-1.0, 1.0):
            raise DatasetError(f"row {row}: label {cell!r} is not -1 or +1")
        return 0.0 if value < 0 else 1.0
    if binary and value not in (0.0, 1.0):
        raise DatasetError(f"row {row}: label {cell!r} is not 0 or 1")
    if not math.isfinite(value):
        raise DatasetError(f"row {row}: non-finite label")
    return value


def _read_csv(path: Path, binary: bool, signed: bool):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise DatasetError(f"{path}: empty file")
    start = 0
    try:
        float(rows[0][0])
    except ValueError:
        start = 1  # header
    if start >= len(rows):
        raise DatasetError(f"{path}: no data rows")
    width = len(rows[start])
    if width < 2:
        raise DatasetError(f"{path}: row {start + 1}: need a label and at least one feature")
    labels, feats = [], []
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise DatasetError(f"{path}: row {lineno}: expected {width} columns, got {len(row)}")
        labels.append(_parse_label(row[0].strip(), lineno, binary, signed))
        try:
            values = [float(c) for c in row[1:]]
        except ValueError:
            raise DatasetError(f"{path}: row {lineno}: non-numeric feature cell") from None
        if not all(math.isfinite(v) for v in values):
            raise DatasetError(f"{path}: row {lineno}: non-finite feature")
        feats.append(values)
    return np.array(labels), np.array(feats)


def _read_binary(path: Path, binary: bool, signed: bool):
    raw = Path(path).read_bytes()
    if not raw:
        raise DatasetError(f"{path}: empty file")
    if raw[:5] != MAGIC or len(raw) < 21:
        raise DatasetError(f"{path}: bad magic, not a RIFD1 file")
    n, d = struct.unpack_from("<QQ", raw, 5)
    body = raw[21:]
    if len(body) != 8 * n * (1 + d):
        raise DatasetError(f"{path}: payload holds {len(body)} bytes, expected {8 * n * (1 + d)}")
    table = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(n, 1 + d)
    labels = np.array([_parse_label(repr(float(v)), i + 1, binary, signed)
                       for i, v in enumerate(table[:, 0])])
    return labels, table[:, 1:]


def read_table(path, fmt: str = "csv", *, binary: bool = True, signed_labels: bool = False):
    """Return ``(labels, features)`` from one file."""
    path = Path(path)
    if fmt not in FORMATS:
        raise DatasetError(f"unknown format {fmt!r}")
    if not path.exists():
        raise DatasetError(f"{path}: no such file")
    reader = _read_csv if fmt == "csv" else _read_binary
    return reader(path, binary, signed_labels)


def _fmt(v: float) -> str:
    return repr(float(v))


def write_table(path, labels, features, fmt: str = "csv"):
    """Write rows ``(label, features...)``; CSV output is the canonical form."""
    labels = np.asarray(labels, dtype=np.float64)
    features = np.asarray(features, dtype=np.float64)
    if features.ndim == 1:
        features = features.reshape(len(labels), -1)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            for lab, row in zip(labels, features):
                lab_s = str(int(lab)) if lab in (0.0, 1.0) else _fmt(lab)
                fh.write(",".join([lab_s] + [_fmt(v) for v in row]) + "\n")
    elif fmt == "binary":
        table = np.column_stack([labels, features]).astype("<f8")
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<QQ", table.shape[0], features.shape[1]))
            fh.write(table.tobytes())
    else:
        raise DatasetError(f"unknown format {fmt!r}")


def load(path, fmt: str = "csv", *, test_path=None, split_manifest=None,
         signed_labels: bool = False, binary: bool = True, name: Optional[str] = None) -> Dataset:
    """Load a dataset.

    Either ``test_path`` names a second file holding the test rows, or
    ``split_manifest`` names a JSON file ``{"test": [row indices]}`` that
    carves the test set out of ``path``. With neither, the test set is empty.
    """
    if test_path is not None and split_manifest is not None:
        raise DatasetError("give either test_path or split_manifest, not both")
    y, X = read_table(path, fmt, binary=binary, signed_labels=signed_labels)
    name = name or Path(path).stem
    if test_path is not None:
        yt, Xt = read_table(test_path, fmt, binary=binary, signed_labels=signed_labels)
        return Dataset(X, y, Xt, yt, name, binary)
    if split_manifest is not None:
        manifest = json.loads(Path(split_manifest).read_text())
        test = np.array(sorted(set(int(i) for i in manifest["test"])), dtype=np.int64)
        if test.size and (test[0] < 0 or test[-1] >= len(y)):
            raise DatasetError("split manifest index out of range")
        mask = np.zeros(len(y), dtype=bool)
        mask[test] = True
        return Dataset(X[~mask], y[~mask], X[mask], y[mask], name, binary)
    return Dataset(X, y, np.zeros((0, X.shape[1])), np.zeros(0), name, binary)


def save(data: Dataset, path, fmt: str = "csv", test_path=None):
    write_table(path, data.labels, data.features, fmt)
    if test_path is not None:
        write_table(test_path, data.test_labels, data.test_features, fmt)
