"""Batch and online learners over the eight string features.

Batch: a linear max-margin classifier trained by stochastic subgradient
descent on the regularized hinge loss, with leakage-safe standardization
fitted on training data only and a grid search capped at 200 configurations.

Online: an ensemble of incremental Gaussian class-conditional models where
each arriving sample is replayed to each ensemble member a Poisson-drawn
number of times (online leveraging bagging). Cold models and exact ties
predict NOT_SE.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Label, Sample
from .errors import BadConfig, SingleClass, TooSmall
from .features import FeatureVector

N_FEATURES = 8
STD_FLOOR = 1e-9
VAR_FLOOR = 1e-9

_SEED_MASK = 0xFFFFFFFFFFFFFFFF  # numpy wants non-negative; seeds are 64-bit


def _np_seed(seed: int) -> int:
    return seed & _SEED_MASK

DEFAULT_ONLINE_ENSEMBLE = 10
DEFAULT_POISSON_LAMBDA = 6.0

_CLS = {Label.NOT_SE: 0, Label.SE: 1}


@dataclass(frozen=True)
class HingeHyperparams:
    lam: float = 1e-4
    lr: float = 0.05
    epochs: int = 30


DEFAULT_HYPERPARAMS = HingeHyperparams()


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    std: np.ndarray

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std


@dataclass(frozen=True)
class BatchModel:
    weights: np.ndarray
    bias: float
    scaler: Scaler
    hyperparams: HingeHyperparams

    def decision(self, fv: FeatureVector) -> float:
        x = self.scaler.transform(np.asarray(fv.as_tuple(), dtype=float))
        return float(self.weights @ x + self.bias)


def fit_scaler(train: list[FeatureVector]) -> Scaler:
    """Per-feature mean and population standard deviation (train only)."""
    if len(train) < 2:
        raise TooSmall(f"scaler needs at least 2 vectors, got {len(train)}")
    X = np.asarray([fv.as_tuple() for fv in train], dtype=float)
    return _fit_scaler_matrix(X)


def _fit_scaler_matrix(X: np.ndarray) -> Scaler:
    mean = X.mean(axis=0)
    std = np.maximum(X.std(axis=0), STD_FLOOR)
    return Scaler(mean=mean, std=std)


def hinge_objective(weights: np.ndarray, bias: float, X: np.ndarray, y: np.ndarray, lam: float) -> float:
    """Average hinge loss plus lam * ||w||^2 on a batch."""
    margins = y * (X @ weights + bias)
    return float(np.mean(np.maximum(0.0, 1.0 - margins)) + lam * weights @ weights)


def hinge_subgradient(
    weights: np.ndarray, bias: float, X: np.ndarray, y: np.ndarray, lam: float
) -> tuple[np.ndarray, float]:
    """Subgradient of hinge_objective (the zero branch at active margins)."""
    margins = y * (X @ weights + bias)
    active = margins < 1.0
    grad_w = -(y[active, None] * X[active]).sum(axis=0) / len(y) + 2.0 * lam * weights
    grad_b = -float(y[active].sum()) / len(y)
    return grad_w, grad_b


def _design_matrix(train: list[Sample]) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray([s.features.as_tuple() for s in train], dtype=float)
    y = np.asarray([1.0 if s.label is Label.SE else -1.0 for s in train])
    return X, y


def batch_train(train: list[Sample], hp: HingeHyperparams = DEFAULT_HYPERPARAMS, seed: int = 0) -> BatchModel:
    """Stochastic subgradient descent over shuffled epochs; deterministic per seed."""
    X, y = _design_matrix(train)
    if len(set(y.tolist())) < 2:
        raise SingleClass("training data contains a single class")
    scaler = _fit_scaler_matrix(X)
    Xs = scaler.transform(X)

    rng = np.random.default_rng(_np_seed(seed))
    w = np.zeros(N_FEATURES)
    b = 0.0
    shrink = 1.0 - 2.0 * hp.lr * hp.lam
    for _ in range(hp.epochs):
        for i in rng.permutation(len(y)):
            margin = y[i] * (w @ Xs[i] + b)
            w *= shrink
            if margin < 1.0:
                w += hp.lr * y[i] * Xs[i]
                b += hp.lr * y[i]
    return BatchModel(weights=w, bias=b, scaler=scaler, hyperparams=hp)


def predict(model: BatchModel, fv: FeatureVector) -> Label:
    """Sign rule; a margin of exactly zero predicts NOT_SE."""
    return Label.SE if model.decision(fv) > 0.0 else Label.NOT_SE


def default_grid() -> list[HingeHyperparams]:
    """10 x 10 x 2 = 200 configurations, matching the tuning budget."""
    grid = []
    for lam in np.logspace(-4, 1, 10):
        for lr in np.logspace(-3, -1, 10):
            for epochs in (20, 50):
                grid.append(HingeHyperparams(lam=float(lam), lr=float(lr), epochs=epochs))
    return grid


def grid_search(
    train: list[Sample],
    grid: list[HingeHyperparams] | None = None,
    folds: int = 3,
    seed: int = 0,
) -> HingeHyperparams:
    """Pick the grid point with the best mean k-fold validation accuracy.

    Folds are carved from the training data only. A fold whose training side
    is single-class is skipped; a configuration with no valid fold is
    disqualified. Ties go to the earliest grid point.
    """
    if grid is None:
        grid = default_grid()
    if not grid:
        raise BadConfig("grid must be non-empty")
    if folds < 2:
        raise BadConfig("need at least 2 folds")
    if len(train) < folds:
        raise TooSmall(f"{len(train)} samples cannot fill {folds} folds")

    rng = np.random.default_rng(_np_seed(seed))
    order = rng.permutation(len(train))
    chunks = np.array_split(order, folds)

    best: tuple[float, int] | None = None
    best_hp = grid[0]
    for gi, hp in enumerate(grid):
        accs = []
        for f, chunk in enumerate(chunks):
            val_idx = set(int(i) for i in chunk)
            fold_train = [train[i] for i in range(len(train)) if i not in val_idx]
            fold_val = [train[int(i)] for i in chunk]
            try:
                model = batch_train(fold_train, hp, seed=seed + f)
            except SingleClass:
                continue
            correct = sum(1 for s in fold_val if predict(model, s.features) is s.label)
            accs.append(correct / len(fold_val))
        if not accs:
            continue
        score = (sum(accs) / len(accs), -gi)
        if best is None or score > best:
            best = score
            best_hp = hp
    if best is None:
        raise SingleClass("every fold was single-class for every configuration")
    return best_hp


# --------------------------------------------------------------------------
# Online leveraging bagging
# --------------------------------------------------------------------------

@dataclass
class GaussianBaseLearner:
    """Incremental per-class Gaussian model (Welford mean/M2 per feature)."""

    counts: np.ndarray = field(default_factory=lambda: np.zeros(2, dtype=np.int64))
    mean: np.ndarray = field(default_factory=lambda: np.zeros((2, N_FEATURES)))
    m2: np.ndarray = field(default_factory=lambda: np.zeros((2, N_FEATURES)))

    def observe(self, x: np.ndarray, cls: int) -> None:
        self.counts[cls] += 1
        n = self.counts[cls]
        delta = x - self.mean[cls]
        self.mean[cls] += delta / n
        self.m2[cls] += delta * (x - self.mean[cls])

    def variance(self, cls: int) -> np.ndarray:
        n = self.counts[cls]
        if n >= 2:
            return np.maximum(self.m2[cls] / (n - 1), VAR_FLOOR)
        return np.full(N_FEATURES, VAR_FLOOR)

    def vote(self, x: np.ndarray) -> int:
        """0 = NOT_SE, 1 = SE; no evidence or exact tie votes NOT_SE."""
        total = int(self.counts.sum())
        if total == 0:
            return 0
        scores = []
        for cls in (0, 1):
            n = int(self.counts[cls])
            if n == 0:
                scores.append(-math.inf)
                continue
            var = self.variance(cls)
            ll = -0.5 * float(np.sum(np.log(2.0 * math.pi * var) + (x - self.mean[cls]) ** 2 / var))
            scores.append(math.log(n / total) + ll)
        return 1 if scores[1] > scores[0] else 0


@dataclass
class OnlineModel:
    learners: list[GaussianBaseLearner]
    lam_poisson: float
    seed: int
    rng: np.random.Generator
    n_draws: int = 0

    @property
    def k(self) -> int:
        return len(self.learners)


def online_init(
    k: int = DEFAULT_ONLINE_ENSEMBLE,
    lam_poisson: float = DEFAULT_POISSON_LAMBDA,
    seed: int = 0,
) -> OnlineModel:
    if k < 1:
        raise BadConfig(f"ensemble size must be >= 1, got {k}")
    if not lam_poisson > 0:
        raise BadConfig(f"poisson lambda must be > 0, got {lam_poisson}")
    return OnlineModel(
        learners=[GaussianBaseLearner() for _ in range(k)],
        lam_poisson=lam_poisson,
        seed=seed,
        rng=np.random.default_rng(_np_seed(seed)),
    )


def online_update(model: OnlineModel, sample: Sample) -> OnlineModel:
    """Replay the sample to each member a Poisson-drawn number of times."""
    x = np.asarray(sample.features.as_tuple(), dtype=float)
    cls = _CLS[sample.label]
    for learner in model.learners:
        r = int(model.rng.poisson(model.lam_poisson))
        model.n_draws += 1
        for _ in range(r):
            learner.observe(x, cls)
    return model


def online_predict(model: OnlineModel, fv: FeatureVector) -> Label:
    """Majority vote of the members; overall ties predict NOT_SE."""
    x = np.asarray(fv.as_tuple(), dtype=float)
    votes_se = sum(learner.vote(x) for learner in model.learners)
    return Label.SE if 2 * votes_se > model.k else Label.NOT_SE


# --------------------------------------------------------------------------
# Model persistence
# --------------------------------------------------------------------------

def model_to_json(model: BatchModel | OnlineModel) -> dict:
    if isinstance(model, BatchModel):
        return {
            "kind": "batch",
            "weights": model.weights.tolist(),
            "bias": model.bias,
            "scaler": {"mean": model.scaler.mean.tolist(), "std": model.scaler.std.tolist()},
            "hyperparams": {
                "lam": model.hyperparams.lam,
                "lr": model.hyperparams.lr,
                "epochs": model.hyperparams.epochs,
            },
        }
    return {
        "kind": "online",
        "lam_poisson": model.lam_poisson,
        "seed": model.seed,
        "n_draws": model.n_draws,
        "learners": [
            {
                "counts": learner.counts.tolist(),
                "mean": learner.mean.tolist(),
                "m2": learner.m2.tolist(),
            }
            for learner in model.learners
        ],
    }


def model_from_json(obj: dict) -> BatchModel | OnlineModel:
    if obj["kind"] == "batch":
        return BatchModel(
            weights=np.asarray(obj["weights"], dtype=float),
            bias=float(obj["bias"]),
            scaler=Scaler(
                mean=np.asarray(obj["scaler"]["mean"], dtype=float),
                std=np.asarray(obj["scaler"]["std"], dtype=float),
            ),
            hyperparams=HingeHyperparams(**obj["hyperparams"]),
        )
    if obj["kind"] == "online":
        learners = [
            GaussianBaseLearner(
                counts=np.asarray(entry["counts"], dtype=np.int64),
                mean=np.asarray(entry["mean"], dtype=float),
                m2=np.asarray(entry["m2"], dtype=float),
            )
            for entry in obj["learners"]
        ]
        model = OnlineModel(
            learners=learners,
            lam_poisson=float(obj["lam_poisson"]),
            seed=int(obj["seed"]),
            rng=np.random.default_rng(_np_seed(int(obj["seed"]))),
            n_draws=0,
        )
        # Replay the consumed draws so the generator state matches the export.
        for _ in range(int(obj["n_draws"])):
            model.rng.poisson(model.lam_poisson)
        model.n_draws = int(obj["n_draws"])
        return model
    raise BadConfig(f"unknown model kind {obj.get('kind')!r}")


def save_model(model: BatchModel | OnlineModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(model), fh)
        fh.write("\n")


def load_model(path: str | Path) -> BatchModel | OnlineModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_json(json.load(fh))
