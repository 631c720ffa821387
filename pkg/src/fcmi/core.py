"""Supersample data model: paired examples, split masks, trials, and gap estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

# 2**20 splits is the largest enumeration exact mode will attempt.
ENUMERATION_LIMIT = 20


class ContractViolation(ValueError):
    """An operation received inputs that violate its contract."""


class SizeError(ValueError):
    """A requested enumeration exceeds the configured size limit."""


@dataclass(frozen=True)
class LabeledExample:
    """A single (feature vector, label) pair. Features are immutable tuples."""

    x: tuple[float, ...]
    y: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", int(self.y))
        if self.y < 0:
            raise ContractViolation(f"class label must be >= 0, got {self.y}")

    @property
    def dim(self) -> int:
        return len(self.x)


class Supersample:
    """n pairs of examples; slot (i, j) flattens to index 2*i + j.

    Internally stores stacked read-only arrays ``xs`` (2n, d) and ``ys`` (2n,)
    so learners can avoid per-example overhead.
    """

    def __init__(self, pairs: Sequence[tuple[LabeledExample, LabeledExample]]):
        if len(pairs) < 1:
            raise ContractViolation("a supersample needs at least one pair")
        flat: list[LabeledExample] = []
        for a, b in pairs:
            flat.extend((a, b))
        dims = {ex.dim for ex in flat}
        if len(dims) != 1:
            raise ContractViolation(f"mixed feature dimensionalities: {sorted(dims)}")
        self.n = len(pairs)
        xs = np.array([ex.x for ex in flat], dtype=float)
        ys = np.array([ex.y for ex in flat], dtype=np.int64)
        xs.setflags(write=False)
        ys.setflags(write=False)
        self.xs = xs
        self.ys = ys

    @classmethod
    def from_arrays(cls, xs: np.ndarray, ys: np.ndarray) -> "Supersample":
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys)
        if xs.ndim != 2 or xs.shape[0] % 2 != 0 or xs.shape[0] == 0:
            raise ContractViolation("xs must be a (2n, d) array with n >= 1")
        if ys.shape != (xs.shape[0],):
            raise ContractViolation("ys must be a (2n,) array")
        pairs = [
            (LabeledExample(tuple(xs[2 * i]), int(ys[2 * i])),
             LabeledExample(tuple(xs[2 * i + 1]), int(ys[2 * i + 1])))
            for i in range(xs.shape[0] // 2)
        ]
        return cls(pairs)

    @property
    def feature_dim(self) -> int:
        return self.xs.shape[1]

    def example(self, i: int, j: int) -> LabeledExample:
        k = 2 * i + j
        return LabeledExample(tuple(self.xs[k]), int(self.ys[k]))

    def pair(self, i: int) -> tuple[LabeledExample, LabeledExample]:
        return self.example(i, 0), self.example(i, 1)

    def pairs(self) -> list[tuple[LabeledExample, LabeledExample]]:
        return [self.pair(i) for i in range(self.n)]

    def __repr__(self) -> str:  # pragma: no cover
        return f"Supersample(n={self.n}, dim={self.feature_dim})"


@dataclass(frozen=True)
class SplitMask:
    """Binary vector selecting one example per pair for training."""

    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ContractViolation(f"split bits must be 0/1, got {bits}")
        object.__setattr__(self, "bits", bits)

    @property
    def n(self) -> int:
        return len(self.bits)

    def to_string(self) -> str:
        """Bit string, pair index 0 leftmost."""
        return "".join(str(b) for b in self.bits)

    @classmethod
    def from_string(cls, s: str) -> "SplitMask":
        if not s or any(c not in "01" for c in s):
            raise ContractViolation(f"malformed split string {s!r}")
        return cls(tuple(int(c) for c in s))

    def flipped(self) -> "SplitMask":
        return SplitMask(tuple(1 - b for b in self.bits))

    def train_slots(self) -> np.ndarray:
        """Flat indices of the selected (training) slots, in pair order."""
        return np.array([2 * i + b for i, b in enumerate(self.bits)], dtype=np.int64)

    def test_slots(self) -> np.ndarray:
        """Flat indices of the complementary (test) slots, in pair order."""
        return np.array([2 * i + 1 - b for i, b in enumerate(self.bits)], dtype=np.int64)


@dataclass(frozen=True)
class SubsetIndex:
    """A sorted, duplicate-free set of pair indices."""

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        if len(idx) < 1:
            raise ContractViolation("subset must be nonempty")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ContractViolation(f"subset indices must be strictly increasing: {idx}")
        if idx[0] < 0:
            raise ContractViolation("subset indices must be >= 0")
        object.__setattr__(self, "indices", idx)

    @property
    def m(self) -> int:
        return len(self.indices)


def _check_lengths(supersample: Supersample, mask: SplitMask) -> None:
    if mask.n != supersample.n:
        raise ContractViolation(
            f"split length {mask.n} does not match supersample n={supersample.n}")


def select_train_set(supersample: Supersample, mask: SplitMask) -> list[LabeledExample]:
    """Training half: element i is pair i's member indexed by the split bit."""
    _check_lengths(supersample, mask)
    return [supersample.example(i, b) for i, b in enumerate(mask.bits)]


def complement_set(supersample: Supersample, mask: SplitMask) -> list[LabeledExample]:
    """Test half: element i is pair i's member indexed by the negated split bit."""
    _check_lengths(supersample, mask)
    return [supersample.example(i, 1 - b) for i, b in enumerate(mask.bits)]


def enumerate_splits(n: int, limit: int = ENUMERATION_LIMIT) -> list[SplitMask]:
    """All 2**n split masks in lexicographic order (bit of pair 0 most significant)."""
    if n < 1:
        raise ContractViolation("n must be >= 1")
    if n > limit:
        raise SizeError(f"refusing to enumerate 2**{n} splits (limit n <= {limit})")
    masks = []
    for code in range(2 ** n):
        bits = tuple((code >> (n - 1 - j)) & 1 for j in range(n))
        masks.append(SplitMask(bits))
    return masks


# --- losses ----------------------------------------------------------------
#
# Every implemented bound assumes a [0, 1]-bounded loss. ``zero_one`` consumes
# class-label predictions; ``absolute`` consumes one-dimensional probability
# vectors for binary labels and is 1-Lipschitz in the prediction.

def zero_one_loss(prediction: int, label: int) -> float:
    return 0.0 if int(prediction) == int(label) else 1.0


def absolute_loss(prediction: Sequence[float], label: int) -> float:
    p = float(prediction[0])
    if not 0.0 <= p <= 1.0 or label not in (0, 1):
        raise ContractViolation("absolute loss needs p in [0,1] and a binary label")
    return abs(p - label)


LOSSES: dict[str, Callable] = {
    "zero_one": zero_one_loss,
    "absolute": absolute_loss,
}

# Which prediction-space kind each loss consumes.
LOSS_SPACE = {"zero_one": "finite", "absolute": "real"}


@dataclass(frozen=True)
class PredictionSpace:
    """Descriptor of the learner's output space: a finite alphabet or real vectors."""

    kind: str  # "finite" | "real"
    size: int | None = None  # |K| when finite
    dim: int | None = None  # d_out when real

    def __post_init__(self) -> None:
        if self.kind == "finite":
            if not self.size or self.size < 1:
                raise ContractViolation("finite prediction space needs size >= 1")
        elif self.kind == "real":
            if not self.dim or self.dim < 1:
                raise ContractViolation("real prediction space needs dim >= 1")
        else:
            raise ContractViolation(f"unknown prediction space kind {self.kind!r}")

    def to_json_dict(self) -> dict:
        if self.kind == "finite":
            return {"kind": "finite", "size": self.size}
        return {"kind": "real", "dim": self.dim}

    @classmethod
    def from_json_dict(cls, d: dict) -> "PredictionSpace":
        return cls(kind=d["kind"], size=d.get("size"), dim=d.get("dim"))


@dataclass(frozen=True)
class TrialRecord:
    """One (split, seed) run: predictions on all 2n slots plus the two half-losses.

    Predictions are pair-major: slot (i, 0) at index 2i, slot (i, 1) at 2i+1.
    """

    split: SplitMask
    seed: int
    predictions: tuple
    train_loss: float
    test_loss: float

    def __post_init__(self) -> None:
        if len(self.predictions) != 2 * self.split.n:
            raise ContractViolation(
                f"expected {2 * self.split.n} predictions, got {len(self.predictions)}")
        for name, v in (("train_loss", self.train_loss), ("test_loss", self.test_loss)):
            if not (0.0 <= v <= 1.0) or math.isnan(v):
                raise ContractViolation(f"{name}={v} outside [0, 1]")


def gap_estimate(trial: TrialRecord) -> float:
    """Signed generalization-gap estimate: test-half loss minus train-half loss."""
    return trial.test_loss - trial.train_loss


def aggregate_gap(table: "PredictionTable") -> tuple[float, float | None]:
    """Mean and sample std (ddof=1) of the gap over trials; std is None for one trial."""
    gaps = [gap_estimate(t) for t in table.trials]
    mean = float(np.mean(gaps))
    if len(gaps) < 2:
        return mean, None
    return mean, float(np.std(gaps, ddof=1))


@dataclass(frozen=True)
class PredictionTable:
    """All trials of one learner on one supersample."""

    supersample_id: str
    n: int
    prediction_space: PredictionSpace
    trials: tuple[TrialRecord, ...]

    def __post_init__(self) -> None:
        if len(self.trials) < 1:
            raise ContractViolation("a prediction table needs at least one trial")
        if any(t.split.n != self.n for t in self.trials):
            raise ContractViolation("all trials must share the supersample's n")

    def to_json_dict(self) -> dict:
        def enc(p):
            if self.prediction_space.kind == "finite":
                return int(p)
            return [float(v) for v in p]

        return {
            "supersample_id": self.supersample_id,
            "n": self.n,
            "prediction_space": self.prediction_space.to_json_dict(),
            "trials": [
                {
                    "split": t.split.to_string(),
                    "seed": int(t.seed),
                    "predictions": [enc(p) for p in t.predictions],
                    "train_loss": t.train_loss,
                    "test_loss": t.test_loss,
                }
                for t in self.trials
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "PredictionTable":
        space = PredictionSpace.from_json_dict(d["prediction_space"])

        def dec(p):
            if space.kind == "finite":
                return int(p)
            return tuple(float(v) for v in p)

        trials = tuple(
            TrialRecord(
                split=SplitMask.from_string(t["split"]),
                seed=int(t["seed"]),
                predictions=tuple(dec(p) for p in t["predictions"]),
                train_loss=float(t["train_loss"]),
                test_loss=float(t["test_loss"]),
            )
            for t in d["trials"]
        )
        return cls(
            supersample_id=d["supersample_id"],
            n=int(d["n"]),
            prediction_space=space,
            trials=trials,
        )
