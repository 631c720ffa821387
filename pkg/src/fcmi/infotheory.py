"""Exact and plug-in discrete information measures, all in nats.

Conventions: 0 * log 0 = 0, empty conditioning cells contribute zero, and the
plain plug-in estimator is the default (Miller-Madow correction behind a flag).
Only finite prediction alphabets reach these estimators; the stability pipeline
handles real-valued outputs through closed-form Gaussian KL instead.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

from .core import (
    ENUMERATION_LIMIT,
    LOSSES,
    ContractViolation,
    SizeError,
    Supersample,
    TrialRecord,
    enumerate_splits,
)

_SUM_TOL = 1e-9
_NEG_TOL = 1e-12

# Largest product-alphabet size for which a plug-in joint over prediction
# tuples and split bits is still considered estimable at desk-scale k2.
PLUGIN_ALPHABET_LIMIT = 2 ** 16


class AbsoluteContinuityError(ValueError):
    """KL divergence is +inf: p puts mass where q has none."""


def _as_distribution(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float).ravel()
    if arr.size == 0:
        raise ContractViolation("empty distribution")
    if np.any(arr < -_NEG_TOL):
        raise ContractViolation("negative probability entry")
    arr = np.clip(arr, 0.0, None)
    total = arr.sum()
    if not math.isclose(total, 1.0, abs_tol=1e-12, rel_tol=1e-9):
        raise ContractViolation(f"probabilities sum to {total}, not 1")
    return arr


def entropy(p) -> float:
    """Shannon entropy -sum p log p of a probability vector."""
    arr = _as_distribution(p)
    nz = arr[arr > 0]
    return float(-np.sum(nz * np.log(nz)))


def kl_divergence(p, q) -> float:
    """KL(p || q); raises AbsoluteContinuityError when the support check fails."""
    pa = _as_distribution(p)
    qa = _as_distribution(q)
    if pa.shape != qa.shape:
        raise ContractViolation("p and q must share one alphabet")
    if np.any((pa > 0) & (qa == 0)):
        raise AbsoluteContinuityError("p has mass outside the support of q (KL = +inf)")
    mask = pa > 0
    return float(np.sum(pa[mask] * np.log(pa[mask] / qa[mask])))


def _joint_probs(joint) -> np.ndarray:
    """Accept a JointHistogram, a count grid, or a probability grid; normalize."""
    if isinstance(joint, JointHistogram):
        return joint.normalized()
    arr = np.asarray(joint, dtype=float)
    if np.any(arr < 0):
        raise ContractViolation("joint entries must be nonnegative")
    total = arr.sum()
    if total <= 0:
        raise ContractViolation("joint must have positive total mass")
    return arr / total


def mutual_information(joint) -> float:
    """I(A; B) from a 2-D joint (histogram counts or probabilities)."""
    p = _joint_probs(joint)
    if p.ndim != 2:
        raise ContractViolation(f"expected a 2-D joint, got ndim={p.ndim}")
    pa = p.sum(axis=1)
    pb = p.sum(axis=0)
    mask = p > 0
    outer = np.outer(pa, pb)
    val = float(np.sum(p[mask] * np.log(p[mask] / outer[mask])))
    return max(val, 0.0)


def conditional_mutual_information(joint3) -> float:
    """I(A; B | C) from a 3-D joint over (A, B, C); empty C-cells contribute zero."""
    p = _joint_probs(joint3)
    if p.ndim != 3:
        raise ContractViolation(f"expected a 3-D joint, got ndim={p.ndim}")
    total = 0.0
    for c in range(p.shape[2]):
        w = p[:, :, c].sum()
        if w <= 0:
            continue
        total += w * mutual_information(p[:, :, c] / w)
    return total


def _sparse_mi(weights: dict[tuple[Hashable, Hashable], float]) -> float:
    """MI of a joint given as {(a, b): probability} with positive entries.

    Cells are processed in a canonical order so the result is independent of
    sample/insertion order, bit for bit.
    """
    items = sorted(weights.items(), key=lambda kv: repr(kv[0]))
    pa: dict[Hashable, float] = {}
    pb: dict[Hashable, float] = {}
    for (a, b), w in items:
        pa[a] = pa.get(a, 0.0) + w
        pb[b] = pb.get(b, 0.0) + w
    val = 0.0
    for (a, b), w in items:
        if w > 0:
            val += w * math.log(w / (pa[a] * pb[b]))
    return max(val, 0.0)


@dataclass(frozen=True)
class JointHistogram:
    """Counts over a product of finite alphabets (2-D, or 3-D for conditional MI)."""

    counts: np.ndarray
    axis_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        arr = np.asarray(self.counts)
        if arr.ndim not in (2, 3):
            raise ContractViolation("histogram must be 2-D or 3-D")
        if np.any(arr < 0) or not np.issubdtype(arr.dtype, np.integer):
            raise ContractViolation("histogram counts must be nonnegative integers")
        if arr.sum() < 1:
            raise ContractViolation("histogram total must be >= 1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)
        names = self.axis_names or tuple(f"axis{i}" for i in range(arr.ndim))
        if len(names) != arr.ndim:
            raise ContractViolation("one axis name per histogram dimension")
        object.__setattr__(self, "axis_names", tuple(names))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def normalized(self) -> np.ndarray:
        return self.counts.astype(float) / self.total

    def merge(self, other: "JointHistogram") -> "JointHistogram":
        """Cell-wise addition; commutative, so parallel trial streams can merge."""
        if self.counts.shape != other.counts.shape:
            raise ContractViolation("histogram shapes differ")
        return JointHistogram(self.counts + other.counts, self.axis_names)

    def to_json_dict(self) -> dict:
        return {
            "axes": [
                {"name": name, "size": int(size)}
                for name, size in zip(self.axis_names, self.counts.shape)
            ],
            "counts": self.counts.tolist(),
            "total": self.total,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "JointHistogram":
        counts = np.asarray(d["counts"], dtype=np.int64)
        names = tuple(a["name"] for a in d["axes"])
        sizes = tuple(a["size"] for a in d["axes"])
        if counts.shape != sizes:
            raise ContractViolation("counts shape does not match alphabet descriptors")
        return cls(counts, names)


def histogram_from_pairs(
    pairs: Iterable[tuple[int, int]], shape: tuple[int, int],
    axis_names: tuple[str, str] = ("a", "b"),
) -> JointHistogram:
    """Dense 2-D histogram from (index, index) samples."""
    counts = np.zeros(shape, dtype=np.int64)
    for a, b in pairs:
        if not (0 <= a < shape[0] and 0 <= b < shape[1]):
            raise ContractViolation(f"symbol ({a}, {b}) outside declared alphabet {shape}")
        counts[a, b] += 1
    return JointHistogram(counts, axis_names)


def plugin_mi_from_samples(
    pairs: Sequence[tuple[Hashable, Hashable]],
    alphabet_a: Sequence[Hashable] | None = None,
    alphabet_b: Sequence[Hashable] | None = None,
    bias_correction: bool = False,
) -> float:
    """Plug-in MI from (symbol, symbol) samples.

    Symbols may be any hashable values; when alphabets are declared, samples
    outside them are rejected. ``bias_correction`` applies the Miller-Madow
    entropy correction (off by default).
    """
    pairs = list(pairs)
    if not pairs:
        raise ContractViolation("need at least one sample pair")
    if alphabet_a is not None:
        allowed = set(alphabet_a)
        for a, _ in pairs:
            if a not in allowed:
                raise ContractViolation(f"symbol {a!r} outside the declared first alphabet")
    if alphabet_b is not None:
        allowed = set(alphabet_b)
        for _, b in pairs:
            if b not in allowed:
                raise ContractViolation(f"symbol {b!r} outside the declared second alphabet")
    n = len(pairs)
    counts: dict[tuple[Hashable, Hashable], int] = {}
    for key in pairs:
        counts[key] = counts.get(key, 0) + 1
    weights = {k: c / n for k, c in counts.items()}
    mi = _sparse_mi(weights)
    if bias_correction:
        occ_a = len({a for a, _ in counts})
        occ_b = len({b for _, b in counts})
        occ_ab = len(counts)
        mi += ((occ_a - 1) + (occ_b - 1) - (occ_ab - 1)) / (2 * n)
        mi = max(mi, 0.0)
    return mi


def product_alphabet_size(alphabet_size: int, m: int) -> int:
    """Cells of the (prediction tuple, split bits) joint for an m-pair subset."""
    return alphabet_size ** (2 * m) * 2 ** m


# --- exact enumeration ------------------------------------------------------


class SplitEnumeration:
    """Learner outputs under every split of one supersample, with exact MI.

    Runs the learner once per (split, seed), caching the full 2n-slot
    prediction tuple, the per-trial half losses, and the weight code when the
    learner exposes one. All information quantities are then exact under the
    uniform distribution over splits (and the uniform seed mixture).
    """

    def __init__(
        self,
        supersample: Supersample,
        learner_spec,
        seeds: Sequence[int] = (0,),
        limit: int = ENUMERATION_LIMIT,
        loss_name: str = "zero_one",
    ):
        from .learners import train_predict  # deferred: learners sits above core

        n = supersample.n
        if n > limit:
            raise SizeError(f"exact enumeration refuses n={n} (limit {limit})")
        if len(seeds) < 1:
            raise ContractViolation("seed policy must contain at least one seed")
        loss = LOSSES[loss_name]
        self.supersample = supersample
        self.n = n
        self.seeds = tuple(int(s) for s in seeds)
        self.splits = enumerate_splits(n, limit=limit)
        queries = [tuple(x) for x in supersample.xs]
        records = []
        for mask in self.splits:
            train = [supersample.example(i, b) for i, b in enumerate(mask.bits)]
            for seed in self.seeds:
                out = train_predict(learner_spec, train, queries, seed)
                preds = out.predictions
                tr = mask.train_slots()
                te = mask.test_slots()
                train_loss = float(
                    np.mean([loss(preds[k], int(supersample.ys[k])) for k in tr]))
                test_loss = float(
                    np.mean([loss(preds[k], int(supersample.ys[k])) for k in te]))
                records.append((mask, seed, preds, out.weight_code, train_loss, test_loss))
        self._records = records
        self._weight = 1.0 / len(records)
        self.has_weight_codes = all(r[3] is not None for r in records)

    # -- joint builders --

    def _mi_of(self, key_fn, cond_fn) -> float:
        weights: dict[tuple, float] = {}
        for mask, seed, preds, wcode, _, _ in self._records:
            k = (key_fn(preds, wcode), cond_fn(mask))
            weights[k] = weights.get(k, 0.0) + self._weight
        return _sparse_mi(weights)

    def mi_index(self, i: int) -> float:
        """I(predictions on pair i ; S_i)."""
        self._check_index(i)
        return self._mi_of(lambda p, w: (p[2 * i], p[2 * i + 1]),
                           lambda m: m.bits[i])

    def mi_subset(self, indices: Sequence[int]) -> float:
        """I(predictions on the subset's pairs ; the subset's split bits)."""
        idx = tuple(indices)
        for i in idx:
            self._check_index(i)
        slots = tuple(s for i in idx for s in (2 * i, 2 * i + 1))
        return self._mi_of(lambda p, w: tuple(p[s] for s in slots),
                           lambda m: tuple(m.bits[i] for i in idx))

    def mi_all(self) -> float:
        """I(full 2n-slot prediction tuple ; S)."""
        return self._mi_of(lambda p, w: tuple(p), lambda m: m.bits)

    def mi_testslots(self) -> float:
        """I(test-slot-only predictions ; S)."""
        weights: dict[tuple, float] = {}
        for mask, _, preds, _, _, _ in self._records:
            key = (tuple(preds[s] for s in mask.test_slots()), mask.bits)
            weights[key] = weights.get(key, 0.0) + self._weight
        return _sparse_mi(weights)

    def weight_mi_index(self, i: int) -> float:
        """I(weight code ; S_i)."""
        self._require_weights()
        self._check_index(i)
        return self._mi_of(lambda p, w: w, lambda m: m.bits[i])

    def weight_mi_subset(self, indices: Sequence[int]) -> float:
        self._require_weights()
        idx = tuple(indices)
        for i in idx:
            self._check_index(i)
        return self._mi_of(lambda p, w: w, lambda m: tuple(m.bits[i] for i in idx))

    def weight_mi_all(self) -> float:
        """I(weight code ; S)."""
        self._require_weights()
        return self._mi_of(lambda p, w: w, lambda m: m.bits)

    def cmi_index(self, i: int, all_pairs: bool = False) -> float:
        """I(predictions ; S_i | S_-i), with pair-i or all-pair predictions."""
        self._check_index(i)
        groups: dict[tuple, dict[tuple, float]] = {}
        for mask, _, preds, _, _, _ in self._records:
            rest = tuple(b for j, b in enumerate(mask.bits) if j != i)
            if all_pairs:
                key = (tuple(preds), mask.bits[i])
            else:
                key = ((preds[2 * i], preds[2 * i + 1]), mask.bits[i])
            cell = groups.setdefault(rest, {})
            cell[key] = cell.get(key, 0.0) + self._weight
        total = 0.0
        for cell in groups.values():
            w = sum(cell.values())
            total += w * _sparse_mi({k: v / w for k, v in cell.items()})
        return total

    # -- gap statistics and trial export --

    def gap_values(self) -> np.ndarray:
        return np.array([te - tr for _, _, _, _, tr, te in self._records])

    def trial_records(self):
        return tuple(
            TrialRecord(split=mask, seed=seed, predictions=tuple(preds),
                        train_loss=tr, test_loss=te)
            for mask, seed, preds, _, tr, te in self._records
        )

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise ContractViolation(f"pair index {i} outside [0, {self.n})")

    def _require_weights(self) -> None:
        if not self.has_weight_codes:
            raise ContractViolation("learner exposes no discrete weight code")


def exact_fcmi_enumeration(
    supersample: Supersample,
    learner_spec,
    target: int | str = "all",
    seeds: Sequence[int] = (0,),
    limit: int = ENUMERATION_LIMIT,
) -> float:
    """Exact f-CMI by full split enumeration.

    ``target`` is a pair index for the single-pair quantity, or "all" for the
    MI between the full prediction tuple and the whole split vector.
    """
    enum = SplitEnumeration(supersample, learner_spec, seeds=seeds, limit=limit)
    if target == "all":
        return enum.mi_all()
    return enum.mi_index(int(target))


def all_subsets(n: int, m: int) -> list[tuple[int, ...]]:
    """All size-m subsets of range(n), lexicographic."""
    if not 1 <= m <= n:
        raise ContractViolation(f"subset size m={m} outside [1, {n}]")
    return list(itertools.combinations(range(n), m))
