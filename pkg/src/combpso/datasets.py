"""Ground-truth benchmark datasets, noise expansion, CSV loading and splits."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class InvalidParameterError(ValueError):
    pass


class DatasetParseError(ValueError):
    """Malformed CSV input; the message names the offending row/column."""


class FoldDegeneracyError(ValueError):
    pass


@dataclass(frozen=True)
class GroundTruth:
    strongly_relevant: frozenset[int] = frozenset()
    optimal_subsets: tuple[frozenset[int], ...] = ()


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    ground_truth: GroundTruth | None = None
    name: str = ""

    def __post_init__(self):
        X = np.ascontiguousarray(self.features, dtype=np.float64)
        y = np.ascontiguousarray(self.labels, dtype=np.int64)
        if X.ndim != 2:
            raise InvalidParameterError("features must be a 2-D matrix")
        if X.shape[0] != y.shape[0]:
            raise InvalidParameterError("features row count differs from labels length")
        if X.shape[1] < 1 or X.shape[0] < 2:
            raise InvalidParameterError("need n >= 1 features and m >= 2 samples")
        if y.min() < 0 or np.unique(y).size < 2:
            raise InvalidParameterError("labels must be 0-based with at least two classes")
        if len(self.feature_names) != X.shape[1]:
            raise InvalidParameterError("feature_names length differs from feature count")
        if self.ground_truth is not None:
            gt = self.ground_truth
            idx = set(gt.strongly_relevant).union(*gt.optimal_subsets) if gt.optimal_subsets else set(gt.strongly_relevant)
            if any(i < 0 or i >= X.shape[1] for i in idx):
                raise InvalidParameterError("ground-truth index out of range")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def n(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1

    def equals(self, other: "Dataset", *, ground_truth: bool = True) -> bool:
        same = (
            np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and self.feature_names == other.feature_names
        )
        return same and (not ground_truth or self.ground_truth == other.ground_truth)


def _names(n):
    return tuple(f"f{i}" for i in range(n))


MONKS_DOMAINS = (3, 3, 2, 3, 4, 2)
MONKS_RULES = ("printed", "uci")


def monks3_label(f: np.ndarray, rule: str = "printed") -> np.ndarray:
    """Class label for rows of the six Monks attributes (1-based values).

    Label is 1 iff (f3 = 1 and f4 = 3) or (f4 != 4 and f1 != 3). With 0-based
    columns this is exactly the UCI Monks-3 target (jacket_color = green and
    holding = sword, or jacket_color != blue and body_shape != octagon), so
    both ``rule`` values select the same function.
    """
    if rule not in MONKS_RULES:
        raise InvalidParameterError(f"unknown Monks rule {rule!r}")
    f = np.asarray(f)
    lab = ((f[:, 3] == 1) & (f[:, 4] == 3)) | ((f[:, 4] != 4) & (f[:, 1] != 3))
    return lab.astype(np.int64)


def gen_monks3(n_total: int = 10, seed=0, rule: str = "printed") -> Dataset:
    if n_total < 6:
        raise InvalidParameterError("Monks needs n_total >= 6")
    grid = np.array(list(itertools.product(*[range(1, d + 1) for d in MONKS_DOMAINS])), dtype=np.float64)
    base = Dataset(grid, monks3_label(grid, rule), _names(6),
                   GroundTruth(frozenset({1, 3, 4}), (frozenset({1, 3, 4}),)), name="monks")
    return expand_with_noise(base, n_total, seed)


def gen_synthetic1(m: int = 200, n_total: int = 10, seed=0) -> Dataset:
    if n_total < 4:
        raise InvalidParameterError("Synthetic 1 needs n_total >= 4")
    rng = np.random.default_rng(seed)
    X = rng.random((m, n_total))
    X[:, 2] = X[:, 0]
    X[:, 3] = X[:, 1]
    y = ((X[:, 0] + X[:, 1]) / 2 > 0.5).astype(np.int64)
    gt = GroundTruth(frozenset(), tuple(frozenset(s) for s in ({0, 1}, {0, 3}, {1, 2}, {2, 3})))
    return Dataset(X, y, _names(n_total), gt, name="syn1")


def gen_synthetic2(m: int = 200, n_total: int = 10, seed=0) -> Dataset:
    if n_total < 4:
        raise InvalidParameterError("Synthetic 2 needs n_total >= 4")
    rng = np.random.default_rng(seed)
    X = rng.random((m, n_total))
    X[:, 2] = (X[:, 0] + X[:, 1]) / 2
    X[:, 3] = X[:, 0]
    y = (X[:, 2] > 0.5).astype(np.int64)
    gt = GroundTruth(frozenset({2}), (frozenset({2}),))
    return Dataset(X, y, _names(n_total), gt, name="syn2")


def expand_with_noise(ds: Dataset, n_total: int, seed=0) -> Dataset:
    """Append U[0,1] noise columns so the dataset has ``n_total`` features."""
    if n_total < ds.n:
        raise InvalidParameterError(f"n_total={n_total} is below the current width {ds.n}")
    if n_total == ds.n:
        return ds
    noise = np.random.default_rng(seed).random((ds.m, n_total - ds.n))
    names = ds.feature_names + tuple(f"noise{i}" for i in range(ds.n, n_total))
    return Dataset(np.hstack([ds.features, noise]), ds.labels, names, ds.ground_truth, name=ds.name)


GENERATORS = {"monks": gen_monks3, "syn1": gen_synthetic1, "syn2": gen_synthetic2}


def generate(name: str, n_total: int, seed=0, **kw) -> Dataset:
    try:
        gen = GENERATORS[name]
    except KeyError:
        raise InvalidParameterError(f"unknown dataset {name!r}; choose from {sorted(GENERATORS)}") from None
    return gen(n_total=n_total, seed=seed, **kw)


def load_csv(path) -> Dataset:
    """Read ``name1,...,nameN,class`` CSV; class tokens map to 0.. in first-seen order."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[-1].lower() != "class":
        raise DatasetParseError(f"{path}: header must list feature names followed by 'class'")
    width = len(header)
    feats, classes, codes = [], [], {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != width:
            raise DatasetParseError(f"{path}: ragged row {lineno}: expected {width} cells, got {len(row)}")
        vals = []
        for col, cell in enumerate(row[:-1]):
            try:
                vals.append(float(cell))
            except ValueError:
                raise DatasetParseError(
                    f"{path}: non-numeric value {cell!r} at row {lineno}, column {col + 1} ({header[col]})"
                ) from None
        token = row[-1].strip()
        classes.append(codes.setdefault(token, len(codes)))
        feats.append(vals)
    if len(codes) < 2:
        raise DatasetParseError(f"{path}: need at least two classes, found {len(codes)}")
    return Dataset(np.array(feats), np.array(classes), tuple(header[:-1]), None, name=path.stem)


def write_csv(ds: Dataset, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(ds.feature_names) + ["class"])
        for row, lab in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in row] + [int(lab)])


@dataclass(frozen=True)
class SplitPlan:
    train_indices: np.ndarray
    test_indices: np.ndarray
    folds: tuple[np.ndarray, ...] = field(default=())

    @property
    def k(self) -> int:
        return len(self.folds)

    def fold_ids(self) -> np.ndarray:
        """Fold number of each training position (aligned with ``train_indices``)."""
        pos = {int(r): i for i, r in enumerate(self.train_indices)}
        ids = np.empty(len(self.train_indices), dtype=np.int64)
        for f, fold in enumerate(self.folds):
            for r in fold:
                ids[pos[int(r)]] = f
        return ids


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def make_split(ds: Dataset, train_fraction: float = 0.7, k: int = 10, seed=0,
               stratify: bool = True) -> SplitPlan:
    """Stratified train/test split plus k stratified folds over the train part."""
    if not 0 < train_fraction < 1:
        raise InvalidParameterError("train_fraction must be in (0, 1)")
    if k < 2:
        raise InvalidParameterError("need k >= 2 folds")
    rng = np.random.default_rng(seed)
    m = ds.m
    n_train = _round_half_up(train_fraction * m)
    y = ds.labels
    if stratify:
        # allocate per-class train counts by largest remainder so the total is exact
        classes, counts = np.unique(y, return_counts=True)
        quota = counts * n_train / m
        alloc = np.floor(quota).astype(int)
        rem = n_train - alloc.sum()
        order = np.lexsort((classes, -(quota - alloc)))
        alloc[order[:rem]] += 1
        train, test = [], []
        for c, a in zip(classes, alloc):
            members = rng.permutation(np.flatnonzero(y == c))
            train.append(members[:a])
            test.append(members[a:])
        train_idx = np.sort(np.concatenate(train))
        test_idx = np.sort(np.concatenate(test))
    else:
        perm = rng.permutation(m)
        train_idx = np.sort(perm[:n_train])
        test_idx = np.sort(perm[n_train:])
    ytr = y[train_idx]
    if len(train_idx) < k:
        raise FoldDegeneracyError(f"{len(train_idx)} training samples cannot fill {k} folds")
    if np.unique(ytr).size < 2:
        raise FoldDegeneracyError("training partition holds a single class")
    fold_of = np.empty(len(train_idx), dtype=np.int64)
    if stratify:
        # deal each class round-robin onto folds, continuing where the last class stopped
        offset = 0
        for c in np.unique(ytr):
            members = rng.permutation(np.flatnonzero(ytr == c))
            fold_of[members] = (offset + np.arange(len(members))) % k
            offset = (offset + len(members)) % k
    else:
        fold_of[rng.permutation(len(train_idx))] = np.arange(len(train_idx)) % k
    folds = tuple(np.sort(train_idx[fold_of == f]) for f in range(k))
    if any(len(f) == 0 for f in folds):
        raise FoldDegeneracyError("empty fold")
    for f in folds:
        rest = np.setdiff1d(train_idx, f)
        if np.unique(y[rest]).size < 2:
            raise FoldDegeneracyError("a fold leaves a single-class training set")
    return SplitPlan(train_idx, test_idx, folds)
