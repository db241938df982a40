"""The nine regressors behind one fit/predict contract.

``fit`` standardizes features for the distance- and gradient-based models
(knn, svr, both networks) and stores the scaler with the model, so
``predict`` always takes raw feature rows.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import ShapeMismatch
from ..windows import Scaler, fit_scaler
from .knn import knn_predict
from .linear import solve_lasso, solve_ols, solve_ridge
from .mlp import Network, fit_mlp
from .svr import fit_svr
from .tree import BoostedEnsemble, Tree, fit_gbt, fit_tree

ALGORITHMS: tuple[str, ...] = (
    "ols", "ridge", "lasso", "knn", "tree", "gbt", "svr", "mlp_complex", "mlp_simple",
)

DISPLAY_NAMES = {
    "ols": "Ordinary Least Squares",
    "ridge": "Ridge Linear Regression",
    "lasso": "Lasso Linear Regression",
    "knn": "K Nearest Neighbors",
    "tree": "Decision Tree",
    "gbt": "Gradient Boosting",
    "svr": "Support Vector Machine",
    "mlp_complex": "ANN #1 (complex)",
    "mlp_simple": "ANN #2 (simple)",
}

DEFAULT_HYPERPARAMETERS: dict[str, dict[str, Any]] = {
    "ols": {},
    "ridge": {"lam": 1.0},
    "lasso": {"lam": 0.01, "max_iter": 10_000, "tol": 1e-6},
    "knn": {"k": 5},
    "tree": {"max_depth": 12, "min_samples_leaf": 5},
    "gbt": {"n_trees": 100, "learning_rate": 0.1, "max_depth": 3},
    "svr": {"epsilon": 0.1, "C": 1.0, "epochs": 20, "step": 0.05, "batch": 32},
    "mlp_complex": {"layers": [64, 64], "epochs": 50, "step": 1e-3, "batch": 32},
    "mlp_simple": {"layers": [4], "epochs": 50, "step": 1e-3, "batch": 32},
}

NEEDS_SCALING = frozenset({"knn", "svr", "mlp_complex", "mlp_simple"})
STOCHASTIC = frozenset({"svr", "mlp_complex", "mlp_simple"})

PAYLOAD_FORMAT = "energyreduce.model"
PAYLOAD_VERSION = 1


@dataclass(frozen=True)
class ModelSpec:
    algorithm: str
    hyperparameters: dict = field(default_factory=dict)
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        merged = {**DEFAULT_HYPERPARAMETERS[self.algorithm], **self.hyperparameters}
        unknown = set(merged) - set(DEFAULT_HYPERPARAMETERS[self.algorithm])
        if unknown:
            raise ValueError(f"{self.algorithm}: unknown hyperparameters {sorted(unknown)}")
        if merged.get("lam", 0) < 0:
            raise ValueError("penalty must be >= 0")
        if merged.get("k", 1) < 1:
            raise ValueError("k must be >= 1")
        object.__setattr__(self, "hyperparameters", merged)

    def with_seed(self, seed: int) -> "ModelSpec":
        return ModelSpec(self.algorithm, dict(self.hyperparameters), int(seed))

    def to_dict(self) -> dict:
        return {"algorithm": self.algorithm, "hyperparameters": self.hyperparameters,
                "rng_seed": self.rng_seed}


@dataclass(frozen=True)
class TrainedModel:
    spec: ModelSpec
    n_features: int
    parameters: dict
    scaler: Scaler | None = None
    training_time: float = 0.0

    def predict(self, X) -> np.ndarray:
        return predict(self, X)

    def to_dict(self) -> dict:
        return {
            "format": PAYLOAD_FORMAT,
            "version": PAYLOAD_VERSION,
            "spec": self.spec.to_dict(),
            "n_features": self.n_features,
            "scaler": self.scaler.to_dict() if self.scaler else None,
            "parameters": _encode(self.spec.algorithm, self.parameters),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TrainedModel":
        d = json.loads(text)
        if d.get("format") != PAYLOAD_FORMAT or d.get("version") != PAYLOAD_VERSION:
            raise ValueError("not a version-1 energyreduce model payload")
        spec = ModelSpec(**d["spec"])
        scaler = Scaler.from_dict(d["scaler"]) if d["scaler"] else None
        return cls(spec, d["n_features"], _decode(spec.algorithm, d["parameters"]), scaler)


def _encode(algorithm: str, p: dict) -> dict:
    if algorithm in ("ols", "ridge", "lasso", "svr"):
        return {"coefficients": p["coefficients"].tolist(), "intercept": p["intercept"]}
    if algorithm == "knn":
        return {"X": p["X"].tolist(), "y": p["y"].tolist(), "k": p["k"]}
    if algorithm == "tree":
        return {"tree": p["tree"].to_dict()}
    if algorithm == "gbt":
        e: BoostedEnsemble = p["ensemble"]
        return {"init": e.init, "learning_rate": e.learning_rate, "trees": [t.to_dict() for t in e.trees]}
    return {"network": p["network"].to_dict()}


def _decode(algorithm: str, p: dict) -> dict:
    if algorithm in ("ols", "ridge", "lasso", "svr"):
        return {"coefficients": np.array(p["coefficients"], dtype=np.float64), "intercept": p["intercept"]}
    if algorithm == "knn":
        return {"X": np.array(p["X"], dtype=np.float64), "y": np.array(p["y"], dtype=np.float64), "k": p["k"]}
    if algorithm == "tree":
        return {"tree": Tree.from_dict(p["tree"])}
    if algorithm == "gbt":
        trees = tuple(Tree.from_dict(t) for t in p["trees"])
        return {"ensemble": BoostedEnsemble(p["init"], p["learning_rate"], trees)}
    return {"network": Network.from_dict(p["network"])}


def fit(spec: ModelSpec, X, y) -> TrainedModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ShapeMismatch(f"need X (n, d) matching y (n,), got {X.shape} and {y.shape}")
    hp = spec.hyperparameters
    started = time.perf_counter()
    scaler = fit_scaler(X) if spec.algorithm in NEEDS_SCALING else None
    Xf = scaler.transform(X) if scaler else X
    alg = spec.algorithm
    if alg == "ols":
        w, b = solve_ols(Xf, y)
        params = {"coefficients": w, "intercept": b}
    elif alg == "ridge":
        w, b = solve_ridge(Xf, y, hp["lam"])
        params = {"coefficients": w, "intercept": b}
    elif alg == "lasso":
        w, b = solve_lasso(Xf, y, hp["lam"], hp["max_iter"], hp["tol"])
        params = {"coefficients": w, "intercept": b}
    elif alg == "knn":
        params = {"X": Xf.copy(), "y": y.copy(), "k": int(hp["k"])}
    elif alg == "tree":
        params = {"tree": fit_tree(Xf, y, hp["max_depth"], hp["min_samples_leaf"])}
    elif alg == "gbt":
        params = {"ensemble": fit_gbt(Xf, y, hp["n_trees"], hp["learning_rate"], hp["max_depth"])}
    elif alg == "svr":
        w, b = fit_svr(Xf, y, hp["epsilon"], hp["C"], hp["epochs"], hp["step"], spec.rng_seed, hp["batch"])
        params = {"coefficients": w, "intercept": b}
    else:
        params = {"network": fit_mlp(Xf, y, hp["layers"], hp["epochs"], hp["step"], hp["batch"], spec.rng_seed)}
    elapsed = time.perf_counter() - started
    return TrainedModel(spec, X.shape[1], params, scaler, elapsed)


def predict(model: TrainedModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1 and X.size == 0:
        return np.empty(0)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ShapeMismatch(f"model expects {model.n_features} columns, got shape {X.shape}")
    if len(X) == 0:
        return np.empty(0)
    Xf = model.scaler.transform(X) if model.scaler else X
    p = model.parameters
    alg = model.spec.algorithm
    if alg in ("ols", "ridge", "lasso", "svr"):
        out = Xf @ p["coefficients"] + p["intercept"]
    elif alg == "knn":
        out = knn_predict(p["X"], p["y"], Xf, p["k"])
    elif alg == "tree":
        out = p["tree"].predict(Xf)
    elif alg == "gbt":
        out = p["ensemble"].predict(Xf)
    else:
        out = p["network"].predict(Xf)
    return np.asarray(out, dtype=np.float64)


__all__ = [
    "ALGORITHMS", "DISPLAY_NAMES", "DEFAULT_HYPERPARAMETERS", "NEEDS_SCALING",
    "ModelSpec", "TrainedModel", "fit", "predict",
]
