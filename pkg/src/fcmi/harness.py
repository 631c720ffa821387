"""Experiment harness: k1 supersamples, k2 (split, seed) trials each.

Samples supersamples, runs the learner across train/test splits, estimates
the information quantities each requested bound needs, and assembles a
deterministic, canonically serialized report. All per-trial seeds derive from
the master seed by counter, so scheduling cannot perturb results.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds as bnd
from .core import (
    ENUMERATION_LIMIT,
    LOSS_SPACE,
    LOSSES,
    ContractViolation,
    PredictionTable,
    SizeError,
    SplitMask,
    Supersample,
    TrialRecord,
    aggregate_gap,
)
from .datagen import GENERATOR_KINDS, GeneratorSpec, sample_supersample
from .infotheory import (
    PLUGIN_ALPHABET_LIMIT,
    SplitEnumeration,
    all_subsets,
    plugin_mi_from_samples,
    product_alphabet_size,
)
from .learners import (
    LearnerSpec,
    derive_seed,
    estimate_stability,
    has_weight_code,
    prediction_space,
    train_predict,
)

# spawn-key channels for counter-based seed derivation
_DATA, _SPLIT, _TRIAL, _STABILITY, _SUBSET = 0, 1, 2, 3, 4

BOUND_NAMES = (
    "fcmi_m1",
    "fcmi_mn",
    "fcmi_subset_m",
    "fcmi_squared",
    "cmi_weights",
    "fcmi_stability",
    "fcmi_stability_squared",
    "vc",
    "ensemble_mn",
    "det_stability",
    "det_stability_squared",
)

_EXACT_ONLY = {"fcmi_stability", "fcmi_stability_squared", "ensemble_mn"}
_REAL_SPACE = {"det_stability", "det_stability_squared"}


class ConfigError(ValueError):
    """The experiment configuration is malformed."""


class UnsupportedCombinationError(ConfigError):
    """A requested bound cannot be computed for this learner/mode."""


class ParseError(ValueError):
    """A persisted report or table failed to parse."""


class SweepFailure(RuntimeError):
    """A sweep member failed; carries the completed reports and the bad index."""

    def __init__(self, index: int, cause: Exception, completed):
        super().__init__(f"sweep member {index} failed: {cause}")
        self.index = index
        self.cause = cause
        self.completed = completed


@dataclass
class ExperimentConfig:
    data: dict
    n: int
    k1: int
    k2: int
    learner: LearnerSpec
    mode: str = "monte_carlo"
    bounds: tuple[str, ...] = ("fcmi_m1",)
    master_seed: int = 0
    loss: str = "zero_one"
    subset_m: int | None = None
    subset_enumerate_limit: int = 1000
    subset_sample_count: int = 200
    exact_seeds: int = 1
    stability_trials: int = 25
    gamma: float = 1.0
    clip_bounds: bool = False
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.k1 < 1 or self.k2 < 1 or self.n < 1:
            raise ConfigError("n, k1, and k2 must all be >= 1")
        if self.mode not in ("monte_carlo", "exact_enumeration"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.loss not in LOSSES:
            raise ConfigError(f"unknown loss {self.loss!r}")
        self.bounds = tuple(self.bounds)
        for b in self.bounds:
            if b not in BOUND_NAMES:
                raise ConfigError(f"unknown bound {b!r} (known: {', '.join(BOUND_NAMES)})")
        if len(set(self.bounds)) != len(self.bounds):
            raise ConfigError("duplicate bound requested")
        kind = self.data.get("kind")
        if kind in GENERATOR_KINDS:
            GeneratorSpec.from_json_dict(self.data)  # validates parameters
        elif kind == "csv":
            if "path" not in self.data.get("params", {}):
                raise ConfigError("csv data source needs params.path")
        else:
            raise ConfigError(f"unknown data source kind {kind!r}")
        if self.exact_seeds < 1:
            raise ConfigError("exact_seeds must be >= 1")

    @classmethod
    def from_json_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            learner = LearnerSpec.from_json_dict(d["learner"])
            subset = d.get("subset_policy", {})
            return cls(
                data=d["data"],
                n=int(d["n"]),
                k1=int(d["k1"]),
                k2=int(d["k2"]),
                learner=learner,
                mode=d.get("mode", "monte_carlo"),
                bounds=tuple(d.get("bounds", ("fcmi_m1",))),
                master_seed=int(d.get("master_seed", 0)),
                loss=d.get("loss", "zero_one"),
                subset_m=subset.get("m"),
                subset_enumerate_limit=int(subset.get("enumerate_limit", 1000)),
                subset_sample_count=int(subset.get("sample_count", 200)),
                exact_seeds=int(d.get("exact_seeds", 1)),
                stability_trials=int(d.get("stability", {}).get("trials", 25)),
                gamma=float(d.get("stability", {}).get("gamma", 1.0)),
                clip_bounds=bool(d.get("clip_bounds", False)),
                jobs=int(d.get("jobs", 1)),
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"bad experiment config: {e}") from e

    def to_json_dict(self) -> dict:
        return {
            "data": self.data,
            "n": self.n,
            "k1": self.k1,
            "k2": self.k2,
            "learner": self.learner.to_json_dict(),
            "mode": self.mode,
            "bounds": list(self.bounds),
            "master_seed": self.master_seed,
            "loss": self.loss,
            "subset_policy": {
                "m": self.subset_m,
                "enumerate_limit": self.subset_enumerate_limit,
                "sample_count": self.subset_sample_count,
            },
            "exact_seeds": self.exact_seeds,
            "stability": {"trials": self.stability_trials, "gamma": self.gamma},
            "clip_bounds": self.clip_bounds,
            "jobs": self.jobs,
        }


@dataclass
class SupersampleResult:
    """Per-supersample gap statistics and information estimates."""

    supersample_id: str
    gap_mean: float
    gap_std: float | None
    mi_per_index: list[float] | None = None
    fcmi_full: float | None = None
    mi_testslots: float | None = None
    weight_mi_full: float | None = None
    weight_mi_per_index: list[float] | None = None
    cmi_per_index: list[float] | None = None
    cmi_allpairs_per_index: list[float] | None = None
    subset_mi: list[float] | None = None
    member_fcmi: list[float] | None = None

    def to_json_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_json_dict(cls, d: dict) -> "SupersampleResult":
        return cls(**d)


@dataclass
class ExperimentReport:
    config: dict
    gap_mean: float
    gap_std: float | None
    supersamples: list[SupersampleResult]
    bounds: list[bnd.BoundReport]
    estimator_meta: dict
    # volatile / bulky companions, excluded from serialization and equality
    wall_clock_sec: float | None = field(default=None, compare=False)
    tables: list[PredictionTable] | None = field(default=None, compare=False)

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "gap_mean": self.gap_mean,
            "gap_std": self.gap_std,
            "supersamples": [s.to_json_dict() for s in self.supersamples],
            "bounds": [b.to_json_dict() for b in self.bounds],
            "estimator_meta": self.estimator_meta,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ExperimentReport":
        return cls(
            config=d["config"],
            gap_mean=float(d["gap_mean"]),
            gap_std=None if d["gap_std"] is None else float(d["gap_std"]),
            supersamples=[SupersampleResult.from_json_dict(s) for s in d["supersamples"]],
            bounds=[bnd.BoundReport.from_json_dict(b) for b in d["bounds"]],
            estimator_meta=d["estimator_meta"],
        )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def canonical_json(payload: dict) -> str:
    """Stable bytes for a JSON payload: sorted keys, two-space indent."""
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2,
                      ensure_ascii=False) + "\n"


def persist(report, path) -> None:
    """Write a report, table, or plain payload as canonical JSON."""
    payload = report.to_json_dict() if hasattr(report, "to_json_dict") else report
    Path(path).write_text(canonical_json(payload), encoding="utf-8")


def load_report(path) -> ExperimentReport:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return ExperimentReport.from_json_dict(payload)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise ParseError(f"{path}: {e}") from e


# --- data plumbing -----------------------------------------------------------


def _load_csv_examples(path: str):
    from .core import LabeledExample

    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"{path}: empty dataset")
    dim = 0
    while f"x_{dim}" in rows[0]:
        dim += 1
    if dim == 0 or "y" not in rows[0]:
        raise ConfigError(f"{path}: expected columns x_0..x_{{p-1}} and y")
    return [
        LabeledExample(tuple(float(r[f"x_{j}"]) for j in range(dim)), int(r["y"]))
        for r in rows
    ]


def _draw_supersample(config: ExperimentConfig, a: int) -> Supersample:
    seed = derive_seed(config.master_seed, _DATA, a)
    if config.data["kind"] == "csv":
        pool = _load_csv_examples(config.data["params"]["path"])
        if len(pool) < 2 * config.n:
            raise ConfigError(
                f"csv pool of {len(pool)} rows cannot supply 2n={2 * config.n} examples")
        rng = np.random.default_rng(seed)
        picks = rng.choice(len(pool), size=2 * config.n, replace=False)
        ex = [pool[i] for i in picks]
        return Supersample([(ex[2 * i], ex[2 * i + 1]) for i in range(config.n)])
    gen = GeneratorSpec.from_json_dict(config.data)
    return sample_supersample(gen, config.n, seed)


def _num_classes(config: ExperimentConfig, supersample: Supersample) -> int:
    return max(2, int(supersample.ys.max()) + 1)


# --- compatibility checks ----------------------------------------------------


def _check_bounds_supported(config: ExperimentConfig) -> None:
    spec = config.learner
    space = prediction_space(spec)
    if LOSS_SPACE[config.loss] != space.kind:
        raise UnsupportedCombinationError(
            f"loss {config.loss!r} does not match the {space.kind!r} prediction "
            f"space of learner {spec.kind!r}")
    for b in config.bounds:
        if b in _REAL_SPACE:
            if space.kind != "real":
                raise UnsupportedCombinationError(
                    f"bound {b!r} needs a real-vector learner; {spec.kind!r} is not")
            if config.data.get("kind") == "csv":
                raise UnsupportedCombinationError(
                    f"bound {b!r} estimates stability by resampling a synthetic "
                    f"generator; csv data sources are not resamplable")
            continue
        if space.kind != "finite":
            raise UnsupportedCombinationError(
                f"bound {b!r} needs a finite prediction alphabet; learner "
                f"{spec.kind!r} emits real vectors")
        if b == "cmi_weights" and not has_weight_code(spec):
            raise UnsupportedCombinationError(
                f"bound 'cmi_weights' needs a discrete weight code; learner "
                f"{spec.kind!r} exposes none")
        if b == "vc" and spec.kind != "threshold_erm":
            raise UnsupportedCombinationError(
                f"bound 'vc' is implemented for the threshold family only, "
                f"not {spec.kind!r}")
        if b == "ensemble_mn" and spec.kind != "ensemble":
            raise UnsupportedCombinationError(
                f"bound 'ensemble_mn' needs an ensemble learner, not {spec.kind!r}")
        if b in _EXACT_ONLY and config.mode != "exact_enumeration":
            raise UnsupportedCombinationError(
                f"bound {b!r} is computed in exact_enumeration mode only")
    if config.mode == "exact_enumeration" and config.n > ENUMERATION_LIMIT:
        raise SizeError(
            f"exact_enumeration refuses n={config.n} (limit {ENUMERATION_LIMIT})")
    if "fcmi_subset_m" in config.bounds:
        m = config.subset_m
        if m is None or not 1 <= m <= config.n:
            raise ConfigError("fcmi_subset_m needs subset_policy.m in [1, n]")
    if config.mode == "monte_carlo":
        space_size = space.size or 2
        for b in config.bounds:
            if b in ("fcmi_mn", "fcmi_squared"):
                cells = product_alphabet_size(space_size, config.n)
            elif b == "fcmi_subset_m":
                cells = product_alphabet_size(space_size, config.subset_m)
            elif b == "cmi_weights":
                # achievable thresholds: midpoints of any two pool values + edges
                cells = (2 * config.n * config.n + config.n + 2) * 2 ** config.n
            else:
                continue
            if cells > PLUGIN_ALPHABET_LIMIT:
                raise UnsupportedCombinationError(
                    f"bound {b!r} in monte_carlo mode needs a joint alphabet of "
                    f"{cells} cells (> {PLUGIN_ALPHABET_LIMIT}); use exact mode "
                    f"or a smaller m/n")


def _subset_family(config: ExperimentConfig) -> tuple[list[tuple[int, ...]], str]:
    n, m = config.n, config.subset_m
    if math.comb(n, m) <= config.subset_enumerate_limit:
        return all_subsets(n, m), "enumerated"
    rng = np.random.default_rng(derive_seed(config.master_seed, _SUBSET, m))
    fam = [tuple(sorted(rng.choice(n, size=m, replace=False).tolist()))
           for _ in range(config.subset_sample_count)]
    return fam, "sampled"


# --- per-supersample execution -----------------------------------------------


def _needs(config: ExperimentConfig, *names: str) -> bool:
    return any(b in config.bounds for b in names)


def _run_supersample(config: ExperimentConfig, a: int,
                     subsets: list[tuple[int, ...]] | None):
    """One supersample's trials plus every estimate the requested bounds need."""
    supersample = _draw_supersample(config, a)
    n = config.n
    num_classes = _num_classes(config, supersample)
    space = prediction_space(config.learner, num_classes)
    loss = LOSSES[config.loss]
    finite = space.kind == "finite"
    result = SupersampleResult(supersample_id=f"ss{a:03d}", gap_mean=0.0, gap_std=None)

    if config.mode == "exact_enumeration":
        seeds = [derive_seed(config.master_seed, _TRIAL, a, t)
                 for t in range(config.exact_seeds)]
        enum = SplitEnumeration(supersample, config.learner, seeds=seeds,
                                loss_name=config.loss)
        trials = enum.trial_records()
        if finite:
            result.mi_per_index = [enum.mi_index(i) for i in range(n)]
            result.fcmi_full = enum.mi_all()
            result.mi_testslots = enum.mi_testslots()
            if _needs(config, "cmi_weights"):
                result.weight_mi_full = enum.weight_mi_all()
                result.weight_mi_per_index = [enum.weight_mi_index(i) for i in range(n)]
            if _needs(config, "fcmi_stability"):
                result.cmi_per_index = [enum.cmi_index(i) for i in range(n)]
            if _needs(config, "fcmi_stability_squared"):
                result.cmi_allpairs_per_index = [
                    enum.cmi_index(i, all_pairs=True) for i in range(n)]
            if subsets is not None:
                result.subset_mi = [enum.mi_subset(u) for u in subsets]
            if _needs(config, "ensemble_mn"):
                members = config.learner.params["members"]
                result.member_fcmi = []
                for j, member in enumerate(members):
                    member_seeds = [derive_seed(s, j) for s in seeds]
                    menum = SplitEnumeration(
                        supersample, LearnerSpec.from_json_dict(member),
                        seeds=member_seeds, loss_name=config.loss)
                    result.member_fcmi.append(menum.mi_all())
    else:
        queries = [tuple(x) for x in supersample.xs]
        trial_list = []
        for b in range(config.k2):
            split_rng = np.random.default_rng(
                derive_seed(config.master_seed, _SPLIT, a, b))
            mask = SplitMask(tuple(int(v) for v in split_rng.integers(0, 2, n)))
            trial_seed = derive_seed(config.master_seed, _TRIAL, a, b)
            train = [supersample.example(i, bit) for i, bit in enumerate(mask.bits)]
            out = train_predict(config.learner, train, queries, trial_seed)
            preds = out.predictions
            train_loss = float(np.mean(
                [loss(preds[k], int(supersample.ys[k])) for k in mask.train_slots()]))
            test_loss = float(np.mean(
                [loss(preds[k], int(supersample.ys[k])) for k in mask.test_slots()]))
            trial_list.append(
                (TrialRecord(mask, trial_seed, tuple(preds), train_loss, test_loss),
                 out.weight_code))
        trials = tuple(t for t, _ in trial_list)
        if finite:
            result.mi_per_index = [
                plugin_mi_from_samples(
                    [((t.predictions[2 * i], t.predictions[2 * i + 1]),
                      t.split.bits[i]) for t in trials])
                for i in range(n)
            ]
            result.mi_testslots = plugin_mi_from_samples(
                [(tuple(t.predictions[s] for s in t.split.test_slots()),
                  t.split.bits) for t in trials])
            if _needs(config, "fcmi_mn", "fcmi_squared"):
                result.fcmi_full = plugin_mi_from_samples(
                    [(t.predictions, t.split.bits) for t in trials])
            if _needs(config, "cmi_weights"):
                result.weight_mi_full = plugin_mi_from_samples(
                    [(wc, t.split.bits) for t, wc in trial_list])
            if subsets is not None:
                result.subset_mi = []
                for u in subsets:
                    slots = tuple(s for i in u for s in (2 * i, 2 * i + 1))
                    result.subset_mi.append(plugin_mi_from_samples(
                        [(tuple(t.predictions[s] for s in slots),
                          tuple(t.split.bits[i] for i in u)) for t in trials]))

    table = PredictionTable(
        supersample_id=result.supersample_id, n=n,
        prediction_space=space, trials=tuple(trials))
    result.gap_mean, result.gap_std = aggregate_gap(table)
    return result, table


def _run_supersample_payload(config_json: str, a: int, subsets) -> tuple[dict, dict]:
    """Process-pool entry point; ships results as JSON-ready dicts."""
    config = ExperimentConfig.from_json_dict(json.loads(config_json))
    subsets = [tuple(u) for u in subsets] if subsets is not None else None
    result, table = _run_supersample(config, a, subsets)
    return result.to_json_dict(), table.to_json_dict()


# --- bound assembly ----------------------------------------------------------


def _collect(results: list[SupersampleResult], attr: str) -> list:
    vals = [getattr(r, attr) for r in results]
    if any(v is None for v in vals):
        raise ContractViolation(f"missing estimate {attr!r} in a supersample result")
    return vals


def _assemble_bounds(config: ExperimentConfig, results: list[SupersampleResult],
                     subset_meta: dict | None) -> tuple[list[bnd.BoundReport], dict]:
    reports: list[bnd.BoundReport] = []
    meta: dict = {}
    digest = {"mode": config.mode, "k2": config.k2, "loss": config.loss}
    for name in config.bounds:
        if name == "fcmi_m1":
            reports.append(bnd.fcmi_bound_m1(_collect(results, "mi_per_index"), digest))
        elif name == "fcmi_mn":
            reports.append(bnd.fcmi_bound_mn(
                _collect(results, "fcmi_full"), config.n, digest))
        elif name == "fcmi_subset_m":
            reports.append(bnd.fcmi_bound_general_m(
                _collect(results, "subset_mi"), config.subset_m,
                {**digest, **(subset_meta or {})}))
        elif name == "fcmi_squared":
            mean_fcmi = float(np.mean(_collect(results, "fcmi_full")))
            reports.append(bnd.fcmi_squared_bound(mean_fcmi, config.n, digest))
        elif name == "cmi_weights":
            reports.append(bnd.cmi_weight_bound(
                _collect(results, "weight_mi_full"), config.n, digest))
        elif name == "fcmi_stability":
            reports.append(bnd.stability_fcmi_bound(
                _collect(results, "cmi_per_index"), digest))
        elif name == "fcmi_stability_squared":
            reports.append(bnd.stability_fcmi_squared_bound(
                _collect(results, "cmi_allpairs_per_index"), config.n, digest))
        elif name == "vc":
            value = bnd.vc_fcmi_bound(1, config.n)
            reports.append(bnd.BoundReport(
                name="vc", value=value, spread=None,
                inputs_digest={**digest, "d_vc": 1, "n": config.n},
                tag="vc-sauer-shelah"))
        elif name == "ensemble_mn":
            sums = [bnd.ensemble_fcmi_bound(r) for r in _collect(results, "member_fcmi")]
            per_ss = np.sqrt(2.0 * np.asarray(sums) / config.n)
            reports.append(bnd.BoundReport(
                name="ensemble_mn", value=float(per_ss.mean()),
                spread=float(np.std(per_ss, ddof=1)) if per_ss.size > 1 else None,
                inputs_digest={**digest, "members": len(results[0].member_fcmi),
                               "n": config.n},
                tag="ensemble-sum"))
        elif name in ("det_stability", "det_stability_squared"):
            need_squared = "det_stability_squared" in config.bounds
            if "stability" not in meta:
                stab = _stability_constants(config, need_squared)
                meta["stability"] = _stability_meta(stab, config)
            info = meta["stability"]
            stab = bnd.StabilityConstants(
                beta=info["beta"], beta1=info["beta1"], beta2=info["beta2"],
                gamma=info["gamma"], d_out=info["d_out"])
            if name == "det_stability":
                value = bnd.deterministic_stability_bound(stab)
                tag = "det-stability"
            else:
                value = bnd.deterministic_stability_squared_bound(stab, config.n)
                tag = "det-stability-squared"
            reports.append(bnd.BoundReport(
                name=name, value=value, spread=None,
                inputs_digest={**digest, **info}, tag=tag))
        else:  # pragma: no cover
            raise ConfigError(f"unknown bound {name!r}")
    return reports, meta


def _stability_constants(config: ExperimentConfig,
                         need_squared: bool) -> bnd.StabilityConstants:
    gen = GeneratorSpec.from_json_dict(config.data)
    space = prediction_space(config.learner)
    seed = derive_seed(config.master_seed, _STABILITY)
    beta = estimate_stability(config.learner, gen, config.n, "self",
                              config.stability_trials, seed)
    beta1 = beta2 = 0.0
    if need_squared:
        beta1 = estimate_stability(config.learner, gen, config.n, "test",
                                   config.stability_trials, seed)
        beta2 = estimate_stability(config.learner, gen, config.n, "train",
                                   config.stability_trials, seed)
    return bnd.StabilityConstants(beta=beta, beta1=beta1, beta2=beta2,
                                  gamma=config.gamma, d_out=space.dim or 1)


def _stability_meta(stab: bnd.StabilityConstants, config: ExperimentConfig) -> dict:
    return {
        "beta": stab.beta,
        "beta1": stab.beta1,
        "beta2": stab.beta2,
        "gamma": stab.gamma,
        "d_out": stab.d_out,
        "sigma_sq": bnd.optimal_noise_variance(stab),
        "trials": config.stability_trials,
    }


# --- top-level runs ----------------------------------------------------------


def run_experiment(config: ExperimentConfig, keep_tables: bool = False) -> ExperimentReport:
    """Run the full protocol for one configuration.

    Deterministic given ``master_seed``: per-(supersample, trial) seeds derive
    by counter, and results assemble in index order regardless of scheduling.
    """
    t0 = time.perf_counter()
    _check_bounds_supported(config)
    subsets = None
    subset_meta = None
    if "fcmi_subset_m" in config.bounds:
        subsets, policy = _subset_family(config)
        subset_meta = {"subset_policy": policy, "subset_count": len(subsets)}

    if config.jobs > 1 and config.k1 > 1:
        config_json = json.dumps(config.to_json_dict())
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            payloads = list(pool.map(
                _run_supersample_payload,
                [config_json] * config.k1, range(config.k1),
                [subsets] * config.k1))
        results = [SupersampleResult.from_json_dict(r) for r, _ in payloads]
        tables = [PredictionTable.from_json_dict(t) for _, t in payloads]
    else:
        results, tables = [], []
        for a in range(config.k1):
            r, t = _run_supersample(config, a, subsets)
            results.append(r)
            tables.append(t)

    bound_reports, extra_meta = _assemble_bounds(config, results, subset_meta)

    gap_means = np.array([r.gap_mean for r in results])
    meta = {
        "k1": config.k1,
        "k2": config.k2,
        "mode": config.mode,
        "loss": config.loss,
        "bias_correction": False,
        "exact_seeds": config.exact_seeds if config.mode == "exact_enumeration" else None,
        "trials_per_supersample": len(tables[0].trials),
        "plugin_alphabet_limit": PLUGIN_ALPHABET_LIMIT,
        **(subset_meta or {}),
        **extra_meta,
    }
    report = ExperimentReport(
        config=config.to_json_dict(),
        gap_mean=float(gap_means.mean()),
        gap_std=float(np.std(gap_means, ddof=1)) if config.k1 > 1 else None,
        supersamples=results,
        bounds=bound_reports,
        estimator_meta=meta,
        wall_clock_sec=time.perf_counter() - t0,
        tables=tables if keep_tables else None,
    )
    return report


def sweep(configs) -> tuple[list[ExperimentReport], list[dict]]:
    """Run several configurations in order; abort on the first failure.

    Raises SweepFailure carrying the completed reports so callers can persist
    partial results and the index of the failing member.
    """
    configs = list(configs)
    if not configs:
        raise ContractViolation("sweep needs at least one configuration")
    reports = []
    for idx, config in enumerate(configs):
        try:
            reports.append(run_experiment(config))
        except Exception as e:
            raise SweepFailure(idx, e, reports) from e
    rows = [row for rep in reports for row in curve_rows(rep)]
    return reports, rows


CURVE_HEADER = ("n", "learner", "bound_name", "gap_mean", "gap_std",
                "bound_value", "bound_spread", "k1", "k2", "mode")


def curve_rows(report: ExperimentReport) -> list[dict]:
    """One curve-table row per bound in the report."""
    cfg = report.config
    clip = bool(cfg.get("clip_bounds", False))
    rows = []
    for b in report.bounds:
        rows.append({
            "n": cfg["n"],
            "learner": cfg["learner"]["kind"],
            "bound_name": b.name,
            "gap_mean": report.gap_mean,
            "gap_std": report.gap_std,
            "bound_value": min(1.0, b.value) if clip else b.value,
            "bound_spread": b.spread,
            "k1": cfg["k1"],
            "k2": cfg["k2"],
            "mode": cfg["mode"],
        })
    return rows


def curve_table_csv(rows) -> str:
    """Deterministic CSV bytes for curve rows (fixed header, repr floats)."""
    def fmt(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return repr(v)
        return str(v)

    out = io.StringIO()
    out.write(",".join(CURVE_HEADER) + "\n")
    for row in rows:
        out.write(",".join(fmt(row[k]) for k in CURVE_HEADER) + "\n")
    return out.getvalue()
