"""Hyperparameters, run configuration and the flat ``key = value`` config format.

Recognised keys (all optional unless noted)::

    dataset          mnist | uji | synthetic-uji           (required)
    method           PRGAN | NGP | AP | DP                  (default PRGAN)
    seed             integer                               (default 0)
    threshold        utility threshold T in (0, 1]
    budget           privacy budget B in (0, 1]
    lambda alpha beta c epochs steps_per_side batch_size g_lr d_lr
    classifier_epochs classifier_lr classifier_batch_size width
    grid.<name>      comma-separated values, e.g. grid.lambda = 0.5, 1, 2
    budgets          comma-separated utility-loss budgets for the trade-off sweep
    epsilons         count of log-spaced DP grid points (default 20)
    methods          comma-separated methods for the comparison reports
    mnist_images mnist_labels uji_csv                      input paths
    records          size of generated synthetic data
    run_id           artifact directory name (default <dataset>-seed<seed>)
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path


class Method(str, enum.Enum):
    PRGAN = "PRGAN"
    NGP = "NGP"
    AP = "AP"
    DP = "DP"


def _method(m) -> Method:
    return m if isinstance(m, Method) else Method(str(m).upper())


@dataclass(frozen=True)
class HyperParams:
    """Loss weights and schedule for the generator/discriminator game."""

    lambda_tradeoff: float = 1.0
    alpha: float = 1.0
    beta_hinge: float = 1.0
    hinge_cap: float = 0.0
    steps_per_side: int = 1
    epochs: int = 20
    batch_size: int = 64
    g_lr: float = 1e-3
    d_lr: float = 2e-4
    seed: int = 0

    def __post_init__(self):
        for name in ("lambda_tradeoff", "alpha", "beta_hinge", "hinge_cap"):
            v = getattr(self, name)
            if not v >= 0 or v == float("inf"):
                raise ValueError(f"{name} must be finite and non-negative, got {v}")
        if self.steps_per_side < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("steps_per_side, epochs and batch_size must be positive")

    def to_dict(self):
        return asdict(self)

    def replace(self, **kw) -> HyperParams:
        return replace(self, **kw)


@dataclass(frozen=True)
class ClassifierConfig:
    """Optimizer settings for classifier training (unspecified by the method itself)."""

    epochs: int = 30
    lr: float = 1e-3
    batch_size: int = 128
    seed: int = 0
    width: float = 1.0  # hidden-width multiplier applied to registry architectures


# config-file key -> HyperParams field
_HYPER_KEYS = {
    "lambda": "lambda_tradeoff",
    "alpha": "alpha",
    "beta": "beta_hinge",
    "c": "hinge_cap",
    "steps_per_side": "steps_per_side",
    "epochs": "epochs",
    "batch_size": "batch_size",
    "g_lr": "g_lr",
    "d_lr": "d_lr",
}
_INT_FIELDS = {"steps_per_side", "epochs", "batch_size", "seed"}


@dataclass(frozen=True)
class RunConfig:
    dataset: str
    seed: int = 0
    method: Method = Method.PRGAN
    hyper: HyperParams = field(default_factory=HyperParams)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    threshold: float | None = None
    budget: float | None = None
    grid: dict = field(default_factory=dict)
    budgets: tuple = ()
    epsilons: int = 20
    paths: dict = field(default_factory=dict)
    records: int | None = None
    methods: tuple = ("PRGAN", "NGP", "AP", "DP")
    run_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "method", _method(self.method))
        object.__setattr__(self, "methods", tuple(_method(m).value for m in self.methods))
        for name in ("threshold", "budget"):
            v = getattr(self, name)
            if v is not None and not 0 < v <= 1:
                raise ValueError(f"{name} must be in (0, 1], got {v}")
        if self.threshold is not None and self.budget is not None:
            raise ValueError("set exactly one of threshold / budget")

    @property
    def mode(self):
        return ("budget", self.budget) if self.budget is not None else ("threshold", self.threshold)

    def search_space(self) -> list[HyperParams]:
        """Grid of candidates from ``grid.*`` keys (the single ``hyper`` if none)."""
        return expand_grid(self.hyper, self.grid)

    def to_dict(self):
        d = asdict(self)
        d["method"] = self.method.value
        return d


def expand_grid(base: HyperParams, grid: dict) -> list[HyperParams]:
    if not grid:
        return [base]
    names = [_HYPER_KEYS.get(k, k) for k in grid]
    valid = {f.name for f in fields(HyperParams)}
    for n in names:
        if n not in valid:
            raise ValueError(f"unknown grid key {n!r}")
    out = []
    for combo in itertools.product(*grid.values()):
        kw = {n: (int(v) if n in _INT_FIELDS else float(v)) for n, v in zip(names, combo)}
        out.append(replace(base, **kw))
    return out


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Returns raw strings."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        raw[key] = value
    return raw


def _floats(value: str):
    return tuple(float(v) for v in value.split(",") if v.strip())


def config_from_mapping(raw: dict) -> RunConfig:
    raw = dict(raw)
    if "dataset" not in raw:
        raise ValueError("config is missing required key 'dataset'")
    seed = int(raw.pop("seed", 0))
    hyper_kw = {"seed": seed}
    clf_kw = {"seed": seed}
    grid = {}
    paths = {}
    kw = {"dataset": raw.pop("dataset"), "seed": seed}
    for key, value in raw.items():
        if key in _HYPER_KEYS:
            f = _HYPER_KEYS[key]
            hyper_kw[f] = int(value) if f in _INT_FIELDS else float(value)
        elif key.startswith("grid."):
            grid[key[5:]] = _floats(value)
        elif key.startswith("classifier_"):
            f = key[len("classifier_"):]
            clf_kw[f] = int(value) if f in ("epochs", "batch_size") else float(value)
        elif key == "width":
            clf_kw["width"] = float(value)
        elif key in ("threshold", "budget"):
            kw[key] = float(value)
        elif key == "budgets":
            kw["budgets"] = _floats(value)
        elif key == "epsilons":
            kw["epsilons"] = int(value)
        elif key == "records":
            kw["records"] = int(value)
        elif key == "method":
            kw["method"] = value
        elif key == "methods":
            kw["methods"] = tuple(v.strip() for v in value.split(",") if v.strip())
        elif key == "run_id":
            kw["run_id"] = value
        elif key in ("mnist_images", "mnist_labels", "uji_csv"):
            paths[key] = value
        else:
            raise ValueError(f"unknown config key {key!r}")
    return RunConfig(
        hyper=HyperParams(**hyper_kw),
        classifier=ClassifierConfig(**clf_kw),
        grid=grid,
        paths=paths,
        **kw,
    )


def load_config(path) -> RunConfig:
    return config_from_mapping(parse_config_text(Path(path).read_text()))
