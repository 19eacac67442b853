"""Run configuration: JSON in, validated engine/dataset settings out.

Every field is either validated or defaulted, and the fully resolved
configuration (defaults included) is echoed into the run log so a run
can always be reproduced from its log alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .acquisition import AcquisitionConfig
from .data import Dataset, load_csv, make_blobs, train_holdout_split
from .engine import STRATEGIES, EngineConfig
from .models import TrainingConfig
from .questions import QuestionKind


class ConfigError(ValueError):
    """A configuration field failed validation; the message names it."""


def _take(section: Dict[str, Any], path: str, known: Dict[str, Any]) -> Dict[str, Any]:
    """Merge a config section over defaults, rejecting unknown fields."""
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise ConfigError(f"{path}: expected an object")
    out = dict(known)
    for key, value in section.items():
        if key not in known:
            raise ConfigError(f"{path}.{key}: unknown field")
        out[key] = value
    return out


def _number(value, path: str, minimum=None, strict_min=None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    v = float(value)
    if minimum is not None and v < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}")
    if strict_min is not None and v <= strict_min:
        raise ConfigError(f"{path}: must be > {strict_min}")
    return v


def _integer(value, path: str, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}")
    return int(value)


def _boolean(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path}: expected true/false, got {value!r}")
    return value


DATASET_DEFAULTS: Dict[str, Any] = {
    "path": None,
    "label_column": "label",
    "display_column": None,
    "generator": None,
    "classes": 4,
    "size": 1000,
    "features": 2,
    "separation": 8.0,
    "holdout_fraction": 0.4,
    "split_seed": 0,
}

ENGINE_DEFAULTS: Dict[str, Any] = {
    "budget": 60.0,
    "strategy": "proposed",
    "use_exploration_frame": True,
    "batch_size": 1,
    "initial_labels": None,
    "warmup_budget": 0.0,
    "seed": 0,
    "rho": 0.5,
    "schedule_levels": 6,
    "metric": "model",
    "model_family": "linear",
    "hidden": [16],
    "kinds": [{"family": "class", "m": 1, "cost": 1.0}],
}

ACQUISITION_DEFAULTS: Dict[str, Any] = {
    "exchange_iters": 60,
    "restarts": 3,
    "jitter_scale": 0.02,
    "cost_exponent": 2.0 / 3.0,
}

TRAINING_DEFAULTS: Dict[str, Any] = {
    "max_epochs": 200,
    "step_size": 0.1,
    "step_decay": 0.999,
    "convergence_tol": 1e-7,
    "l2_penalty": 1e-4,
}

RUN_DEFAULTS: Dict[str, Any] = {
    "repeats": 1,
    "output_dir": "out",
}


@dataclass
class DatasetSpec:
    path: Optional[str]
    label_column: str
    display_column: Optional[str]
    generator: Optional[str]
    classes: int
    size: int
    features: int
    separation: float
    holdout_fraction: float
    split_seed: int

    def load(self) -> Dataset:
        if self.path is not None:
            ds = load_csv(self.path, self.label_column, self.display_column)
        elif self.generator == "blobs":
            ds = make_blobs(
                self.classes,
                self.size,
                n_features=self.features,
                separation=self.separation,
                seed=self.split_seed,
            )
        else:
            raise ConfigError("dataset: set either 'path' or generator: 'blobs'")
        return train_holdout_split(ds, self.holdout_fraction, seed=self.split_seed)


@dataclass
class RunSpec:
    dataset: DatasetSpec
    engine: EngineConfig
    repeats: int
    output_dir: str
    resolved: Dict[str, Any] = field(default_factory=dict)


def _parse_kinds(raw, path: str) -> List[QuestionKind]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{path}: expected a non-empty list of question kinds")
    kinds = []
    for i, item in enumerate(raw):
        entry = _take(item, f"{path}[{i}]", {"family": "class", "m": 1, "cost": 1.0})
        try:
            kinds.append(
                QuestionKind(
                    family=entry["family"],
                    m=_integer(entry["m"], f"{path}[{i}].m", minimum=1),
                    cost=_number(entry["cost"], f"{path}[{i}].cost", strict_min=0.0),
                )
            )
        except ValueError as exc:
            raise ConfigError(f"{path}[{i}]: {exc}")
    return kinds


def parse_run_config(raw: Dict[str, Any]) -> RunSpec:
    """Validate a config dict; unknown fields and bad types are rejected."""
    if not isinstance(raw, dict):
        raise ConfigError("config: expected a JSON object at the top level")
    top_known = {
        "dataset": None,
        "engine": None,
        "acquisition": None,
        "training": None,
        "repeats": RUN_DEFAULTS["repeats"],
        "output_dir": RUN_DEFAULTS["output_dir"],
    }
    top = _take(raw, "config", top_known)

    d = _take(top["dataset"], "dataset", DATASET_DEFAULTS)
    if d["path"] is not None and not isinstance(d["path"], str):
        raise ConfigError("dataset.path: expected a string")
    if d["generator"] is not None and d["generator"] != "blobs":
        raise ConfigError(f"dataset.generator: unknown generator {d['generator']!r}")
    if d["path"] is None and d["generator"] is None:
        raise ConfigError("dataset: set either 'path' or generator: 'blobs'")
    dataset = DatasetSpec(
        path=d["path"],
        label_column=str(d["label_column"]),
        display_column=d["display_column"],
        generator=d["generator"],
        classes=_integer(d["classes"], "dataset.classes", minimum=2),
        size=_integer(d["size"], "dataset.size", minimum=2),
        features=_integer(d["features"], "dataset.features", minimum=1),
        separation=_number(d["separation"], "dataset.separation", strict_min=0.0),
        holdout_fraction=_number(d["holdout_fraction"], "dataset.holdout_fraction"),
        split_seed=_integer(d["split_seed"], "dataset.split_seed"),
    )
    if not 0.0 < dataset.holdout_fraction < 1.0:
        raise ConfigError("dataset.holdout_fraction: must lie in (0, 1)")

    a = _take(top["acquisition"], "acquisition", ACQUISITION_DEFAULTS)
    try:
        acquisition = AcquisitionConfig(
            exchange_iters=_integer(a["exchange_iters"], "acquisition.exchange_iters", minimum=1),
            restarts=_integer(a["restarts"], "acquisition.restarts", minimum=1),
            jitter_scale=_number(a["jitter_scale"], "acquisition.jitter_scale", minimum=0.0),
            cost_exponent=_number(a["cost_exponent"], "acquisition.cost_exponent"),
        )
    except ValueError as exc:
        raise ConfigError(f"acquisition: {exc}")

    t = _take(top["training"], "training", TRAINING_DEFAULTS)
    try:
        training = TrainingConfig(
            max_epochs=_integer(t["max_epochs"], "training.max_epochs", minimum=0),
            step_size=_number(t["step_size"], "training.step_size", strict_min=0.0),
            step_decay=_number(t["step_decay"], "training.step_decay", strict_min=0.0),
            convergence_tol=_number(t["convergence_tol"], "training.convergence_tol", strict_min=0.0),
            l2_penalty=_number(t["l2_penalty"], "training.l2_penalty", minimum=0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"training: {exc}")

    e = _take(top["engine"], "engine", ENGINE_DEFAULTS)
    kinds = _parse_kinds(e["kinds"], "engine.kinds")
    strategy = e["strategy"]
    if strategy not in STRATEGIES:
        raise ConfigError(f"engine.strategy: unknown strategy {strategy!r}")
    hidden = e["hidden"]
    if not isinstance(hidden, list) or not all(isinstance(h, int) and h > 0 for h in hidden):
        raise ConfigError("engine.hidden: expected a list of positive layer widths")
    initial_labels = e["initial_labels"]
    if initial_labels is not None:
        initial_labels = _integer(initial_labels, "engine.initial_labels", minimum=1)
    try:
        engine = EngineConfig(
            budget=_number(e["budget"], "engine.budget", minimum=0.0),
            kinds=kinds,
            strategy=strategy,
            use_exploration_frame=_boolean(e["use_exploration_frame"], "engine.use_exploration_frame"),
            batch_size=_integer(e["batch_size"], "engine.batch_size", minimum=1),
            initial_labels=initial_labels,
            warmup_budget=_number(e["warmup_budget"], "engine.warmup_budget", minimum=0.0),
            seed=_integer(e["seed"], "engine.seed"),
            rho=_number(e["rho"], "engine.rho"),
            schedule_levels=_integer(e["schedule_levels"], "engine.schedule_levels", minimum=2),
            metric=str(e["metric"]),
            model_family=str(e["model_family"]),
            hidden=tuple(hidden),
            acquisition=acquisition,
            training=training,
        )
    except ValueError as exc:
        raise ConfigError(f"engine: {exc}")

    repeats = _integer(top["repeats"], "repeats", minimum=1)
    output_dir = top["output_dir"]
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir: expected a string")

    resolved = {
        "dataset": d,
        "engine": {**e, "initial_labels": initial_labels},
        "acquisition": a,
        "training": t,
        "repeats": repeats,
        "output_dir": output_dir,
    }
    return RunSpec(dataset=dataset, engine=engine, repeats=repeats, output_dir=output_dir, resolved=resolved)


def load_run_config(path) -> RunSpec:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")
    return parse_run_config(raw)
