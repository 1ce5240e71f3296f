"""Dataset loading, normalization and splitting.

Features are mapped per column into ``[-scale, scale]`` (default 0.2) so
that ``a * x`` stays inside every device's read window. Two maps exist:
``minmax`` spreads the observed range over the interval, ``zscore`` puts
three standard deviations at the ends and clips the tails, which keeps a few
outliers from squeezing the bulk of a column. MNIST pixels share one global
scale instead, keeping blank pixels at ``-scale``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import DatasetError

BUILTINS = ("xor", "iris", "breast_cancer", "mnist")
NORMALIZATIONS = ("minmax", "zscore")
# per-builtin default; heavy-tailed columns get the clipped z-score
DEFAULT_NORMALIZATION = {"breast_cancer": "zscore"}
ALIASES = {"bc": "breast_cancer", "breast-cancer": "breast_cancer", "iris-embedded": "iris"}


@dataclass
class Dataset:
    name: str
    X: np.ndarray
    y: np.ndarray
    n_classes: int
    normalization: dict = field(default_factory=dict)
    train_idx: np.ndarray | None = None
    test_idx: np.ndarray | None = None

    def __post_init__(self):
        if self.X.ndim != 2 or len(self.X) != len(self.y):
            raise DatasetError(f"{self.name}: feature matrix and labels disagree")
        if not np.all(np.isfinite(self.X)):
            raise DatasetError(f"{self.name}: missing or non-finite feature values")
        if self.y.min(initial=0) < 0 or self.y.max(initial=0) >= self.n_classes:
            raise DatasetError(f"{self.name}: labels outside [0, {self.n_classes})")
        if self.train_idx is None:
            self.train_idx = np.arange(len(self.y))
            self.test_idx = np.arange(0)

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def X_train(self):
        return self.X[self.train_idx]

    @property
    def y_train(self):
        return self.y[self.train_idx]

    @property
    def X_test(self):
        return self.X[self.test_idx]

    @property
    def y_test(self):
        return self.y[self.test_idx]


def normalize(X, scale: float = 0.2, method: str = "minmax"):
    """Per-column map to ``[-scale, scale]``; constant columns go to 0."""
    if method == "minmax":
        lo, hi = X.min(axis=0), X.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        Z = (X - lo) / span * 2 * scale - scale
        Z[:, hi == lo] = 0.0
        info = {"method": method, "min": lo.tolist(), "max": hi.tolist(), "scale": scale}
    elif method == "zscore":
        mu, sd = X.mean(axis=0), X.std(axis=0)
        Z = (X - mu) / np.where(sd > 0, 3 * sd, 1.0) * scale
        Z[:, sd == 0] = 0.0
        info = {"method": method, "mean": mu.tolist(), "std": sd.tolist(), "scale": scale}
    else:
        raise DatasetError(f"unknown normalization {method!r}; choose from {NORMALIZATIONS}")
    return np.clip(Z, -scale, scale), info


def stratified_split(y, test_fraction: float, rng: np.random.Generator):
    train, test = [], []
    for c in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == c))
        k = int(round(test_fraction * len(idx)))
        test.append(idx[:k])
        train.append(idx[k:])
    return rng.permutation(np.concatenate(train)), rng.permutation(np.concatenate(test))


def read_csv(path) -> tuple[np.ndarray, np.ndarray, list]:
    """Header row, numeric feature columns, label in the last column."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"{path}: no such file")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise DatasetError(f"{path}: needs a header and at least one data row")
    header, body = rows[0], rows[1:]
    if len(header) < 2:
        raise DatasetError(f"{path}: needs at least one feature and a label column")
    feats, labels = [], []
    for n, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DatasetError(f"{path}:{n}: expected {len(header)} fields, got {len(row)}")
        try:
            feats.append([float(c) for c in row[:-1]])
        except ValueError:
            raise DatasetError(f"{path}:{n}: non-numeric feature value") from None
        labels.append(row[-1].strip())
    X = np.array(feats, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise DatasetError(f"{path}: missing or non-finite feature values")
    try:
        keys = sorted(set(labels), key=float)
    except ValueError:
        keys = sorted(set(labels))
    lookup = {k: i for i, k in enumerate(keys)}
    return X, np.array([lookup[v] for v in labels], dtype=np.int64), keys


def _mnist(n: int, rng):
    try:
        from mlxtend.data import mnist_data
    except ImportError:
        raise DatasetError("the mnist builtin needs the optional 'mlxtend' package") from None
    X, y = mnist_data()
    picked = []
    for c in range(10):
        idx = np.flatnonzero(y == c)
        picked.append(rng.choice(idx, size=min(len(idx), n // 10), replace=False))
    idx = np.sort(np.concatenate(picked))
    return X[idx].astype(np.float64), y[idx].astype(np.int64)


def load_dataset(source: str | Path, seed: int = 0, test_fraction: float = 0.3,
                 scale: float = 0.2, mnist_samples: int = 1000,
                 normalization: str | None = None) -> Dataset:
    """Load a builtin (``xor``, ``iris``, ``breast_cancer``, ``mnist``) or a CSV file.

    The result is normalized and split 70/30 stratified (XOR trains and tests
    on its four points). ``normalization`` overrides the per-dataset default
    (``minmax`` except for breast cancer).
    """
    rng = np.random.default_rng(seed)
    key = ALIASES.get(str(source), str(source))
    if key == "xor":
        X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=np.float64)
        y = np.array([0, 1, 1, 0])
        Z, norm = normalize(X, scale, normalization or "minmax")
        idx = np.arange(4)
        return Dataset("xor", Z, y, 2, norm, idx, idx)
    if key == "mnist":
        X, y = _mnist(mnist_samples, rng)
        Z = X / 255.0 * 2 * scale - scale
        norm = {"min": 0.0, "max": 255.0, "scale": scale}
        name, n_classes = "mnist", 10
    else:
        if key in ("iris", "breast_cancer"):
            path = resources.files("memxbar") / "data" / f"{key}.csv"
            name = key
        elif Path(source).suffix or Path(source).exists():
            path, name = Path(source), Path(source).stem
        else:
            raise DatasetError(f"unknown builtin dataset {source!r}; choose from {BUILTINS} or give a CSV path")
        X, y, keys = read_csv(path)
        Z, norm = normalize(X, scale, normalization or DEFAULT_NORMALIZATION.get(name, "minmax"))
        n_classes = max(2, len(keys))
    train, test = stratified_split(y, test_fraction, rng)
    return Dataset(name, Z, y, n_classes, norm, train, test)
