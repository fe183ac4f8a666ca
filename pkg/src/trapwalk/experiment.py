"""
Experiment specs: a single ensemble or a sweep over ``K``, ``rho``, ``init`` and
``engine``, plus analysis options.  ``run_experiment`` executes every cell and
writes ``<cell>.csv`` (``t,mean,stderr``) and ``<cell>.json`` (fit report and the
metadata needed to regenerate the CSV).
"""
from __future__ import annotations

import itertools
import json
import logging
import math
import traceback
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .analysis import DEFAULT_MARGIN, DEFAULT_T_MIN, classical_references, detect_crossover, predict
from .ensemble import Engine, EnsembleSpec, SurvivalSeries, parallel_map, run_configuration
from .errors import ConfigurationError, FitError
from .fileio import write_csv, write_json
from .walk import HADAMARD, Chirality, CoinSpec

log = logging.getLogger(__name__)

CELL_SCHEMA = "trapwalk-cell-v1"
DEFAULT_JOB_CAP = 256

_SPEC_FIELDS = {
    "name", "K", "rho", "T", "M", "init", "engine", "master_seed", "coin",
    "analysis", "output_dir", "formats", "scale", "max_jobs",
}
_ANALYSIS_FIELDS = {"t_min", "crossover_margin", "weighted"}
_SCALE_FIELDS = {"M_factor", "T_factor", "published_M", "published_T"}
_FORMATS = {"csv", "json"}


class SpecError(ConfigurationError):
    """Invalid experiment spec; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str) -> None:
        super().__init__(f"field {field_name!r}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class AnalysisOptions:
    t_min: int = DEFAULT_T_MIN
    crossover_margin: float = DEFAULT_MARGIN
    weighted: bool = False


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    K: tuple[int, ...]
    rho: tuple[float, ...]
    T: int
    M: int
    init: tuple[str, ...] = ("up",)
    engine: tuple[str, ...] = (Engine.QW,)
    master_seed: int = 0
    coin: Any = "hadamard"
    analysis: AnalysisOptions = field(default_factory=AnalysisOptions)
    output_dir: str = "out"
    formats: tuple[str, ...] = ("csv", "json")
    scale: dict | None = None
    max_jobs: int = DEFAULT_JOB_CAP

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "K": list(self.K),
            "rho": list(self.rho),
            "T": self.T,
            "M": self.M,
            "init": list(self.init),
            "engine": list(self.engine),
            "master_seed": self.master_seed,
            "coin": self.coin,
            "analysis": {
                "t_min": self.analysis.t_min,
                "crossover_margin": self.analysis.crossover_margin,
                "weighted": self.analysis.weighted,
            },
            "output_dir": self.output_dir,
            "formats": list(self.formats),
            "max_jobs": self.max_jobs,
        }
        if self.scale is not None:
            d["scale"] = dict(self.scale)
        return d

    def cells(self) -> list["Cell"]:
        coin = parse_coin(self.coin)
        out: dict[str, Cell] = {}
        for engine, K, rho, init in itertools.product(self.engine, self.K, self.rho, self.init):
            if engine == Engine.CRW:
                name = f"crw-K{K}-rho{rho:g}"
                init = "up"
            else:
                name = f"qw-{init}-K{K}-rho{rho:g}"
            if name in out:
                continue
            try:
                ens = EnsembleSpec(K, rho, self.T, self.M, init, engine, self.master_seed, coin)
            except ConfigurationError as exc:
                raise SpecError(_blame(str(exc)), str(exc)) from None
            out[name] = Cell(name, ens, self)
        if len(out) > self.max_jobs:
            raise SpecError("max_jobs", f"sweep has {len(out)} cells, cap is {self.max_jobs}")
        return list(out.values())


@dataclass(frozen=True)
class Cell:
    name: str
    ensemble: EnsembleSpec
    parent: ExperimentSpec

    def single_spec(self) -> ExperimentSpec:
        e = self.ensemble
        return replace(
            self.parent,
            name=f"{self.parent.name}/{self.name}",
            K=(e.K,), rho=(e.rho,), init=(e.init.value,), engine=(e.engine,),
        )


def _blame(message: str) -> str:
    head = message.split()[0].split("=")[0] if message else ""
    return head if head in _SPEC_FIELDS else "spec"


def _as_list(d: dict, key: str, kind, default=None) -> tuple:
    raw = d.get(key, default)
    if raw is None:
        raise SpecError(key, "is required")
    items = raw if isinstance(raw, list) else [raw]
    if not items:
        raise SpecError(key, "must not be empty")
    out = []
    for item in items:
        if kind is int and (isinstance(item, bool) or not isinstance(item, int)):
            raise SpecError(key, f"expected an integer, got {item!r}")
        if kind is float and (isinstance(item, bool) or not isinstance(item, (int, float))):
            raise SpecError(key, f"expected a number, got {item!r}")
        if kind is str and not isinstance(item, str):
            raise SpecError(key, f"expected a string, got {item!r}")
        out.append(kind(item))
    return tuple(out)


def _as_int(d: dict, key: str, default=None) -> int:
    raw = d.get(key, default)
    if raw is None:
        raise SpecError(key, "is required")
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise SpecError(key, f"expected an integer, got {raw!r}")
    return raw


def parse_coin(raw: Any) -> CoinSpec:
    """``"hadamard"`` or a 2x2 nested list of numbers or ``[re, im]`` pairs."""
    if raw == "hadamard":
        return HADAMARD
    try:
        m = np.array(
            [[complex(*v) if isinstance(v, list) else complex(v) for v in row] for row in raw],
            dtype=np.complex128,
        )
        return CoinSpec(m)
    except ConfigurationError as exc:
        raise SpecError("coin", str(exc)) from None
    except (TypeError, ValueError):
        raise SpecError("coin", f"expected 'hadamard' or a 2x2 matrix, got {raw!r}") from None


def parse_spec(doc: dict) -> ExperimentSpec:
    """Validate a decoded spec document; unknown keys are rejected."""
    if not isinstance(doc, dict):
        raise SpecError("spec", "top level must be a JSON object")
    if doc.get("schema") == CELL_SCHEMA:
        doc = doc.get("experiment")
        if not isinstance(doc, dict):
            raise SpecError("experiment", "metadata record carries no experiment")
    unknown = sorted(set(doc) - _SPEC_FIELDS)
    if unknown:
        raise SpecError(unknown[0], "unknown field")

    K = _as_list(doc, "K", int)
    rho = _as_list(doc, "rho", float)
    for r in rho:
        if not 0 <= r < 1:
            raise SpecError("rho", f"must satisfy 0 <= rho < 1, got {r}")
    for k in K:
        if k < 1:
            raise SpecError("K", f"must be positive, got {k}")
    T = _as_int(doc, "T")
    if T < 1:
        raise SpecError("T", f"must be >= 1, got {T}")
    M = _as_int(doc, "M")
    if M < 1:
        raise SpecError("M", f"must be >= 1, got {M}")
    init = _as_list(doc, "init", str, "up")
    for i in init:
        if i not in {c.value for c in Chirality}:
            raise SpecError("init", f"unknown initialisation {i!r}")
    engine = _as_list(doc, "engine", str, Engine.QW)
    for e in engine:
        if e not in Engine.ALL:
            raise SpecError("engine", f"must be one of {Engine.ALL}, got {e!r}")
    seed = _as_int(doc, "master_seed", 0)
    if not 0 <= seed < 2**64:
        raise SpecError("master_seed", "must be a 64-bit unsigned integer")
    coin = doc.get("coin", "hadamard")
    parse_coin(coin)

    a = doc.get("analysis", {})
    if not isinstance(a, dict):
        raise SpecError("analysis", "must be an object")
    bad = sorted(set(a) - _ANALYSIS_FIELDS)
    if bad:
        raise SpecError(f"analysis.{bad[0]}", "unknown field")
    t_min = _as_int(a, "t_min", DEFAULT_T_MIN)
    if t_min < 1:
        raise SpecError("analysis.t_min", "must be >= 1")
    margin = a.get("crossover_margin", DEFAULT_MARGIN)
    if isinstance(margin, bool) or not isinstance(margin, (int, float)) or not 0 <= margin < 1:
        raise SpecError("analysis.crossover_margin", f"must be a number in [0, 1), got {margin!r}")
    weighted = a.get("weighted", False)
    if not isinstance(weighted, bool):
        raise SpecError("analysis.weighted", "must be true or false")

    out_dir = doc.get("output_dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        raise SpecError("output_dir", "must be a non-empty string")
    formats = _as_list(doc, "formats", str, ["csv", "json"])
    for f in formats:
        if f not in _FORMATS:
            raise SpecError("formats", f"unsupported format {f!r}")
    scale = doc.get("scale")
    if scale is not None:
        if not isinstance(scale, dict):
            raise SpecError("scale", "must be an object")
        bad = sorted(set(scale) - _SCALE_FIELDS)
        if bad:
            raise SpecError(f"scale.{bad[0]}", "unknown field")
    max_jobs = _as_int(doc, "max_jobs", DEFAULT_JOB_CAP)
    name = doc.get("name", "experiment")
    if not isinstance(name, str):
        raise SpecError("name", "must be a string")

    spec = ExperimentSpec(
        name=name, K=K, rho=rho, T=T, M=M, init=init, engine=engine, master_seed=seed, coin=coin,
        analysis=AnalysisOptions(t_min, float(margin), weighted), output_dir=out_dir,
        formats=formats, scale=scale, max_jobs=max_jobs,
    )
    spec.cells()
    return spec


def load_spec(path: str | Path) -> ExperimentSpec:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpecError("spec", f"not valid JSON: {exc}") from None
    return parse_spec(doc)


def _finite(obj: Any) -> Any:
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def cell_report(cell: Cell, series: SurvivalSeries, csv_name: str | None) -> dict:
    e = cell.ensemble
    opts = cell.parent.analysis
    try:
        fit = detect_crossover(series, opts.t_min, margin=opts.crossover_margin, weighted=opts.weighted).to_dict()
    except FitError as exc:
        fit = {"error": str(exc)}
    pred = None
    if e.engine == Engine.QW and 0 < e.rho < 1:
        pred = predict(e.rho, e.init).to_dict()
    refs = classical_references()
    return _finite({
        "schema": CELL_SCHEMA,
        "code_version": __version__,
        "cell": cell.name,
        "csv": csv_name,
        "experiment": cell.single_spec().to_dict(),
        "ensemble": {
            "K": e.K, "rho": e.rho, "rho_actual": e.rho_actual, "n": e.n, "N": e.K - e.n,
            "T": e.T, "M": e.M, "init": e.init.value if e.engine == Engine.QW else None,
            "engine": e.engine, "master_seed": int(e.master_seed),
            "seed_derivation": "SeedSequence(master_seed, spawn_key=(r,)), r = 0..M-1",
        },
        "analysis": {
            "t_min": opts.t_min, "crossover_margin": opts.crossover_margin, "weighted": opts.weighted,
            "fit_space": "ln(-ln <P>) vs ln t",
        },
        "fit": fit,
        "prediction": pred,
        "references": refs._asdict(),
        "scale": cell.parent.scale,
    })


def _guarded_run(spec: EnsembleSpec, r: int):
    try:
        return True, run_configuration(spec, r)
    except Exception as exc:  # reported per cell by the caller
        return False, f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}"


@dataclass
class RunResult:
    written: list[Path]
    failures: dict[str, str]
    series: dict[str, SurvivalSeries]

    @property
    def ok(self) -> bool:
        return not self.failures


def run_experiment(spec: ExperimentSpec, output_dir: str | Path | None = None, workers: int | None = None) -> RunResult:
    """Run every cell, then write all files from this process."""
    out = Path(output_dir if output_dir is not None else spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = spec.cells()
    jobs = [(c.ensemble, r) for c in cells for r in range(c.ensemble.M)]
    log.info("running %d cells, %d configurations", len(cells), len(jobs))
    results = parallel_map(_guarded_run, jobs, workers)

    written: list[Path] = []
    failures: dict[str, str] = {}
    all_series: dict[str, SurvivalSeries] = {}
    pos = 0
    for cell in cells:
        chunk = results[pos : pos + cell.ensemble.M]
        pos += cell.ensemble.M
        errors = [msg for ok, msg in chunk if not ok]
        if errors:
            failures[cell.name] = errors[0].splitlines()[0]
            continue
        series = SurvivalSeries.from_configs(np.vstack([row for _, row in chunk]), cell.ensemble)
        all_series[cell.name] = series
        csv_name = f"{cell.name}.csv" if "csv" in spec.formats else None
        if csv_name:
            write_csv(out / csv_name, series)
            written.append(out / csv_name)
        if "json" in spec.formats:
            write_json(out / f"{cell.name}.json", cell_report(cell, series, csv_name))
            written.append(out / f"{cell.name}.json")
    return RunResult(written, failures, all_series)
