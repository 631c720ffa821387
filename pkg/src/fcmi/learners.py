"""Built-in learning procedures behind one train/predict contract.

Every learner is a pure function of (training sequence, query inputs, seed):
identical inputs and seed reproduce the output bit for bit. Class-label
learners emit ints; probability-output learners emit tuples of floats.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import ContractViolation, LabeledExample, PredictionSpace

LEARNER_KINDS = (
    "memorizer",
    "threshold_erm",
    "knn",
    "logistic_gd",
    "sgld_linear",
    "noisy_wrapper",
    "ensemble",
)


@dataclass(frozen=True)
class LearnerSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in LEARNER_KINDS:
            raise ContractViolation(f"unknown learner kind {self.kind!r}")
        _validate_params(self.kind, self.params)

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params}

    @classmethod
    def from_json_dict(cls, d: dict) -> "LearnerSpec":
        return cls(kind=d["kind"], params=dict(d.get("params", {})))


def _validate_params(kind: str, params: dict) -> None:
    if kind == "knn" and params.get("k", 1) < 1:
        raise ContractViolation("knn needs k >= 1")
    if kind in ("logistic_gd", "sgld_linear"):
        if params.get("steps", 1) < 1:
            raise ContractViolation(f"{kind} needs steps >= 1")
        if params.get("output", "label") not in ("label", "prob"):
            raise ContractViolation("output must be 'label' or 'prob'")
    if kind == "noisy_wrapper":
        if params.get("sigma_sq", 1.0) <= 0:
            raise ContractViolation("noisy_wrapper needs sigma_sq > 0")
        if "inner" not in params:
            raise ContractViolation("noisy_wrapper needs an inner learner spec")
    if kind == "ensemble":
        members = params.get("members", [])
        if not members:
            raise ContractViolation("ensemble needs at least one member")
        if params.get("combiner", "majority") != "majority":
            raise ContractViolation("only the majority-vote combiner is implemented")


@dataclass(frozen=True)
class LearnerOutput:
    predictions: tuple
    weight_code: int | None = None


def derive_seed(seed: int, *path: int) -> int:
    """Counter-style child seed; stable across platforms and schedules."""
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


def prediction_space(spec: LearnerSpec, num_classes: int = 2) -> PredictionSpace:
    """Output-space descriptor for a learner on data with the given label count."""
    if spec.kind in ("memorizer", "knn"):
        return PredictionSpace("finite", size=num_classes)
    if spec.kind == "threshold_erm":
        return PredictionSpace("finite", size=2)
    if spec.kind in ("logistic_gd", "sgld_linear"):
        if spec.params.get("output", "label") == "prob":
            return PredictionSpace("real", dim=1)
        return PredictionSpace("finite", size=2)
    if spec.kind == "noisy_wrapper":
        inner = LearnerSpec.from_json_dict(spec.params["inner"])
        inner_space = prediction_space(inner, num_classes)
        if inner_space.kind != "real":
            raise ContractViolation(
                "noisy_wrapper needs an inner learner with real-vector output")
        return inner_space
    if spec.kind == "ensemble":
        return PredictionSpace("finite", size=num_classes)
    raise ContractViolation(f"unknown learner kind {spec.kind!r}")


def has_weight_code(spec: LearnerSpec) -> bool:
    return spec.kind == "threshold_erm"


def is_deterministic(spec: LearnerSpec) -> bool:
    """Deterministic given the seed is universal; these ignore the seed entirely."""
    if spec.kind in ("memorizer", "threshold_erm", "knn"):
        return True
    if spec.kind == "ensemble":
        return all(is_deterministic(LearnerSpec.from_json_dict(m))
                   for m in spec.params["members"])
    return False


# --- individual learners ----------------------------------------------------


def _train_arrays(train: Sequence[LabeledExample]) -> tuple[np.ndarray, np.ndarray]:
    xs = np.array([ex.x for ex in train], dtype=float)
    ys = np.array([ex.y for ex in train], dtype=np.int64)
    return xs, ys


def _memorize(train, queries) -> tuple:
    table: dict[tuple, int] = {}
    for ex in train:
        # first occurrence wins for duplicate inputs
        table.setdefault(tuple(ex.x), int(ex.y))
    return tuple(table.get(tuple(q), 0) for q in queries)


def threshold_erm_fit(train: Sequence[LabeledExample]) -> float:
    """Empirical-risk-minimizing threshold for 1-D features in [0, 1].

    Separable samples get the midpoint of the zero-error interval; one-class
    samples snap to the domain edge (1.0 for all-zeros, 0.0 for all-ones).
    Otherwise the leftmost minimum-error cut wins.
    """
    xs, ys = _train_arrays(train)
    x1 = xs[:, 0]
    if xs.shape[1] != 1 or np.any(x1 < 0) or np.any(x1 > 1):
        raise ContractViolation("threshold_erm needs 1-D features in [0, 1]")
    zeros = x1[ys == 0]
    ones = x1[ys == 1]
    if ones.size == 0:
        return 1.0
    if zeros.size == 0:
        return 0.0
    m0, m1 = float(zeros.max()), float(ones.min())
    if m0 < m1:
        return (m0 + m1) / 2.0
    values = np.unique(x1)
    candidates = np.concatenate(([0.0], (values[:-1] + values[1:]) / 2.0, [1.0]))
    errors = [(np.mean((x1 > w).astype(int) != ys), w) for w in candidates]
    best = min(e for e, _ in errors)
    return float(next(w for e, w in errors if e == best))


def _threshold_predict(w: float, queries) -> tuple:
    return tuple(int(float(q[0]) > w) for q in queries)


def _knn(train, queries, k: int) -> tuple:
    xs, ys = _train_arrays(train)
    k_eff = min(k, len(train))
    num_classes = int(ys.max()) + 1 if len(ys) else 1
    preds = []
    for q in queries:
        d2 = np.sum((xs - np.asarray(q, dtype=float)) ** 2, axis=1)
        order = np.argsort(d2, kind="stable")  # distance ties fall to lower index
        votes = np.bincount(ys[order[:k_eff]], minlength=num_classes)
        preds.append(int(votes.argmax()))  # vote ties fall to lower class
    return tuple(preds)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_fit(train, seed: int, steps: int = 100, lr: float = 0.5,
                 init_scale: float = 0.01) -> np.ndarray:
    """Full-batch gradient descent on mean logistic loss; no early stopping."""
    xs, ys = _train_arrays(train)
    if np.any((ys != 0) & (ys != 1)):
        raise ContractViolation("logistic_gd needs binary labels")
    X = np.hstack([xs, np.ones((xs.shape[0], 1))])
    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, init_scale, X.shape[1])
    for _ in range(steps):
        p = _sigmoid(X @ w)
        w = w - lr * (X.T @ (p - ys)) / X.shape[0]
    return w


def sgld_fit(train, seed: int, steps: int = 200, lr0: float = 0.05,
             lr_decay: float = 0.9, lr_decay_every: int = 100,
             temp_min: float = 100.0, temp_max: float = 4000.0,
             temp_scale: float = 100.0, init_scale: float = 0.01) -> np.ndarray:
    """Vanilla SGLD on the summed logistic loss of a linear model.

    Per-step noise variance is lr_t / beta_t with the inverse temperature
    beta_t = min(temp_max, max(temp_min, 10 * exp(t / temp_scale))). The
    standard-normal stream is drawn unconditionally so that runs at different
    temperatures share it.
    """
    xs, ys = _train_arrays(train)
    if np.any((ys != 0) & (ys != 1)):
        raise ContractViolation("sgld_linear needs binary labels")
    X = np.hstack([xs, np.ones((xs.shape[0], 1))])
    rng = np.random.default_rng(seed)
    w = rng.normal(0.0, init_scale, X.shape[1])
    for t in range(steps):
        lr = lr0 * lr_decay ** (t // lr_decay_every)
        beta = min(temp_max, max(temp_min, 10.0 * math.exp(t / temp_scale)))
        grad = X.T @ (_sigmoid(X @ w) - ys)
        eps = rng.standard_normal(X.shape[1])
        w = w - 0.5 * lr * grad + math.sqrt(lr / beta) * eps
    return w


def _linear_predict(w: np.ndarray, queries, output: str) -> tuple:
    preds = []
    for q in queries:
        z = float(np.dot(np.append(np.asarray(q, dtype=float), 1.0), w))
        p = float(_sigmoid(np.array([z]))[0])
        preds.append((p,) if output == "prob" else int(p > 0.5))
    return tuple(preds)


def _digest(data: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "big")


def _train_digest(train) -> int:
    xs, ys = _train_arrays(train)
    return _digest(np.ascontiguousarray(xs).tobytes() + ys.tobytes())


def noisy_predict(inner_predictions: Sequence[Sequence[float]], sigma_sq: float,
                  seed: int, train_digest: int,
                  queries: Sequence[Sequence[float]]) -> tuple:
    """Add per-(train set, query) Gaussian noise to real-vector predictions.

    The noise stream is keyed on (seed, train digest, query digest): asking
    the same query twice in one trial repeats the noise, while distinct
    queries and distinct trials get independent draws.
    """
    if sigma_sq <= 0:
        raise ContractViolation("sigma_sq must be > 0")
    sigma = math.sqrt(sigma_sq)
    out = []
    for vec, q in zip(inner_predictions, queries):
        qdig = _digest(np.asarray(q, dtype=float).tobytes())
        rng = np.random.default_rng([seed, train_digest, qdig])
        noise = rng.normal(0.0, sigma, len(vec))
        out.append(tuple(float(v) + float(e) for v, e in zip(vec, noise)))
    return tuple(out)


def ensemble_combine(member_predictions: Sequence[int]) -> int:
    """Majority vote; ties break toward the smallest class index."""
    if len(member_predictions) < 1:
        raise ContractViolation("need at least one member prediction")
    votes = np.bincount(np.asarray(member_predictions, dtype=np.int64))
    return int(votes.argmax())


def train_predict(spec: LearnerSpec, train: Sequence[LabeledExample],
                  queries: Sequence[Sequence[float]], seed: int) -> LearnerOutput:
    """Train the specified learner and predict on the queries."""
    if len(train) == 0:
        raise ContractViolation("training set must be nonempty")
    dim = train[0].dim
    if any(ex.dim != dim for ex in train) or any(len(q) != dim for q in queries):
        raise ContractViolation("feature dimensionality mismatch")
    p = spec.params
    if spec.kind == "memorizer":
        return LearnerOutput(_memorize(train, queries))
    if spec.kind == "threshold_erm":
        w = threshold_erm_fit(train)
        # injective encoding keeps predictions a function of the code, so the
        # weight-level information never undercounts the prediction-level one;
        # for any fixed example pool the achievable code set is still finite
        code = struct.unpack("<q", struct.pack("<d", w))[0]
        return LearnerOutput(_threshold_predict(w, queries), weight_code=code)
    if spec.kind == "knn":
        return LearnerOutput(_knn(train, queries, int(p.get("k", 1))))
    if spec.kind == "logistic_gd":
        w = logistic_fit(train, seed, steps=int(p.get("steps", 100)),
                         lr=float(p.get("lr", 0.5)),
                         init_scale=float(p.get("init_scale", 0.01)))
        return LearnerOutput(_linear_predict(w, queries, p.get("output", "label")))
    if spec.kind == "sgld_linear":
        w = sgld_fit(train, seed, steps=int(p.get("steps", 200)),
                     lr0=float(p.get("lr0", 0.05)),
                     lr_decay=float(p.get("lr_decay", 0.9)),
                     lr_decay_every=int(p.get("lr_decay_every", 100)),
                     temp_min=float(p.get("temp_min", 100.0)),
                     temp_max=float(p.get("temp_max", 4000.0)),
                     temp_scale=float(p.get("temp_scale", 100.0)),
                     init_scale=float(p.get("init_scale", 0.01)))
        return LearnerOutput(_linear_predict(w, queries, p.get("output", "label")))
    if spec.kind == "noisy_wrapper":
        inner = LearnerSpec.from_json_dict(p["inner"])
        if prediction_space(inner).kind != "real":
            raise ContractViolation(
                "noisy_wrapper needs an inner learner with real-vector output")
        inner_out = train_predict(inner, train, queries, seed)
        noisy = noisy_predict(inner_out.predictions, float(p["sigma_sq"]), seed,
                              _train_digest(train), queries)
        return LearnerOutput(noisy)
    if spec.kind == "ensemble":
        members = [LearnerSpec.from_json_dict(m) for m in p["members"]]
        per_member = [
            train_predict(m, train, queries, derive_seed(seed, j)).predictions
            for j, m in enumerate(members)
        ]
        combined = tuple(
            ensemble_combine([mp[q] for mp in per_member])
            for q in range(len(queries))
        )
        return LearnerOutput(combined)
    raise ContractViolation(f"unknown learner kind {spec.kind!r}")


def member_predictions(spec: LearnerSpec, train, queries, seed: int) -> list[tuple]:
    """Per-member prediction tuples of an ensemble, with the derived member seeds."""
    if spec.kind != "ensemble":
        raise ContractViolation("member_predictions needs an ensemble learner")
    members = [LearnerSpec.from_json_dict(m) for m in spec.params["members"]]
    return [
        train_predict(m, train, queries, derive_seed(seed, j)).predictions
        for j, m in enumerate(members)
    ]


# --- functional stability ----------------------------------------------------


def _as_vector(pred) -> np.ndarray:
    """Real view of a prediction; class labels embed as 1-D real vectors."""
    if isinstance(pred, (int, np.integer)):
        return np.array([float(pred)])
    return np.asarray(pred, dtype=float)


def estimate_stability(spec: LearnerSpec, gen, n: int, which: str,
                       trials: int, seed: int = 0) -> float:
    """Monte Carlo estimate of a functional-stability constant.

    Resamples the training collection and the replacement point, swaps out
    each coordinate in turn, and measures the RMS prediction shift at the
    replaced point ("self"), at a fresh test point ("test"), or at the other
    training points ("train"). Returns the max over the probed coordinates,
    matching the for-all quantifier of the definition.
    """
    from .datagen import sample_examples

    if which not in ("self", "test", "train"):
        raise ContractViolation(f"unknown stability clause {which!r}")
    if trials < 1:
        raise ContractViolation("trials must be >= 1")
    if which == "train" and n < 2:
        raise ContractViolation("train-stability needs n >= 2 (no other index j)")

    acc = np.zeros((n, n)) if which == "train" else np.zeros(n)
    for t in range(trials):
        examples = sample_examples(gen, n + 2, derive_seed(seed, t, 0))
        base_set = examples[:n]
        z_new = examples[n]
        z_test = examples[n + 1]
        r = derive_seed(seed, t, 1)
        if which == "self":
            queries = [ex.x for ex in base_set]
        elif which == "test":
            queries = [z_test.x]
        else:
            queries = [ex.x for ex in base_set]
        base_preds = train_predict(spec, base_set, queries, r).predictions
        for i in range(n):
            swapped = list(base_set)
            swapped[i] = z_new
            preds = train_predict(spec, swapped, queries, r).predictions
            if which == "self":
                d = _as_vector(preds[i]) - _as_vector(base_preds[i])
                acc[i] += float(np.dot(d, d))
            elif which == "test":
                d = _as_vector(preds[0]) - _as_vector(base_preds[0])
                acc[i] += float(np.dot(d, d))
            else:
                for j in range(n):
                    if j == i:
                        continue
                    d = _as_vector(preds[j]) - _as_vector(base_preds[j])
                    acc[i, j] += float(np.dot(d, d))
    return float(np.sqrt(acc.max() / trials))
