"""Wrapper evaluation: cross-validated classifier error on a feature mask."""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from . import forest
from .datasets import Dataset, SplitPlan


class ContractViolation(ValueError):
    pass


@dataclass(frozen=True)
class ForestParams:
    ntree: int = 100
    nodesize: int = 1
    seed: int = 0
    mtry_rule: str = "sqrt"

    def __post_init__(self):
        if self.ntree < 1:
            raise ValueError("ntree must be >= 1")
        if self.nodesize < 1:
            raise ValueError("nodesize must be >= 1")
        if self.mtry_rule != "sqrt":
            raise ValueError("only the 'sqrt' mtry rule is supported")


@dataclass(frozen=True)
class Fitness:
    scalar: float
    error: float
    size_fraction: float


@dataclass(frozen=True)
class Objectives:
    f1: float
    f2: float

    def as_tuple(self) -> tuple[float, float]:
        return (self.f1, self.f2)


def so_fitness(error: float, subset_size: int, total_features: int, alpha: float = 0.8) -> Fitness:
    """Weighted sum ``alpha * error + (1 - alpha) * |S| / |F|`` (lower is better)."""
    if subset_size < 1:
        raise ContractViolation("empty feature subset")
    if subset_size > total_features:
        raise ContractViolation("subset larger than the feature set")
    if not 0.0 <= error <= 1.0:
        raise ContractViolation(f"error rate {error} outside [0, 1]")
    frac = subset_size / total_features
    return Fitness(alpha * error + (1.0 - alpha) * frac, float(error), frac)


def mo_objectives(error: float, subset_size: int, total_features: int) -> Objectives:
    if subset_size < 1:
        raise ContractViolation("empty feature subset")
    return Objectives(float(error), subset_size / total_features)


class EvalCounter:
    """Thread-safe count of oracle invocations."""

    def __init__(self):
        self._lock = threading.Lock()
        self._calls = 0

    def increment(self, k: int = 1) -> None:
        with self._lock:
            self._calls += k

    @property
    def calls(self) -> int:
        return self._calls


def train_forest(X, y, p: ForestParams, n_classes=None) -> forest.ForestModel:
    return forest.fit_forest(X, y, ntree=p.ntree, nodesize=p.nodesize, seed=p.seed, n_classes=n_classes)


ORACLE_KINDS = ("rf", "stump", "1nn")


class WrapperOracle:
    """Scores masks by k-fold CV error on the training partition.

    Fold assignments and per-fold tree seeds come from the split and the
    forest seed only, so every mask in a run is scored on identical folds.
    ``memoize`` caches errors by mask; ``counter`` then counts cache misses.
    """

    def __init__(self, ds: Dataset, split: SplitPlan, params: ForestParams | None = None,
                 kind: str = "rf", memoize: bool = False, counter: EvalCounter | None = None):
        if kind not in ORACLE_KINDS:
            raise ValueError(f"oracle kind must be one of {ORACLE_KINDS}")
        self.ds = ds
        self.split = split
        self.params = params or ForestParams()
        self.kind = kind
        self.memoize = memoize
        self.counter = counter or EvalCounter()
        self._cache: dict[bytes, float] = {}
        self._cache_lock = threading.Lock()
        self.n_classes = ds.n_classes
        self._Xtr = np.ascontiguousarray(ds.features[split.train_indices])
        self._ytr = np.ascontiguousarray(ds.labels[split.train_indices])
        self._Xte = np.ascontiguousarray(ds.features[split.test_indices])
        self._yte = np.ascontiguousarray(ds.labels[split.test_indices])
        fold_of = split.fold_ids()
        self._folds = [(np.flatnonzero(fold_of != f), np.flatnonzero(fold_of == f)) for f in range(split.k)]
        for tr, _ in self._folds:
            if np.unique(self._ytr[tr]).size < 2:
                raise ContractViolation("a CV training fold holds a single class")
        self._fold_seeds = [self._seeds(f) for f in range(split.k)]
        self._test_seeds = self._seeds(split.k)

    @property
    def n_features(self) -> int:
        return self.ds.n

    def _seeds(self, stream: int) -> np.ndarray:
        ntree = self.params.ntree if self.kind == "rf" else 1
        return forest.tree_seeds(self.params.seed, ntree, stream)

    def _fit_predict(self, Xa, ya, Xb, seeds):
        if self.kind == "1nn":
            return ya[np.argmin(cdist(Xb, Xa, "sqeuclidean"), axis=1)]
        if self.kind == "stump":
            return forest.fit_predict(Xa, ya, Xb, seeds=seeds, n_classes=self.n_classes,
                                      mtry=Xa.shape[1], max_depth=1, bootstrap=False)
        return forest.fit_predict(Xa, ya, Xb, seeds=seeds, nodesize=self.params.nodesize,
                                  n_classes=self.n_classes)

    @staticmethod
    def _columns(mask) -> np.ndarray:
        mask = np.asarray(mask, dtype=bool)
        cols = np.flatnonzero(mask)
        if cols.size == 0:
            raise ContractViolation("mask selects no features")
        return cols

    def cv_error(self, mask) -> float:
        """Mean fold misclassification rate; no counting, no cache."""
        cols = self._columns(mask)
        Xs = np.ascontiguousarray(self._Xtr[:, cols])
        errs = []
        for (tr, te), seeds in zip(self._folds, self._fold_seeds):
            pred = self._fit_predict(Xs[tr], self._ytr[tr], Xs[te], seeds)
            errs.append(np.mean(pred != self._ytr[te]))
        return float(np.mean(errs))

    def evaluate(self, mask) -> float:
        """CV error of ``mask``; increments the counter once (per cache miss when memoizing)."""
        if not self.memoize:
            err = self.cv_error(mask)
            self.counter.increment()
            return err
        key = np.packbits(np.asarray(mask, dtype=bool)).tobytes()
        with self._cache_lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        err = self.cv_error(mask)
        with self._cache_lock:
            if key not in self._cache:
                self._cache[key] = err
                self.counter.increment()
        return err

    def test_error(self, mask) -> float:
        """Train on the whole training partition, report error on the test partition."""
        cols = self._columns(mask)
        pred = self._fit_predict(np.ascontiguousarray(self._Xtr[:, cols]), self._ytr,
                                 np.ascontiguousarray(self._Xte[:, cols]), self._test_seeds)
        return float(np.mean(pred != self._yte))

    @property
    def calls(self) -> int:
        return self.counter.calls


def evaluate_subset(mask, ds: Dataset, split: SplitPlan, p: ForestParams, counter: EvalCounter) -> float:
    return WrapperOracle(ds, split, p, counter=counter).evaluate(mask)


def test_error(mask, ds: Dataset, split: SplitPlan, p: ForestParams) -> float:
    return WrapperOracle(ds, split, p).test_error(mask)
