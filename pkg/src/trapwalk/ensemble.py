"""
Quenched-disorder ensembles: random trap placement, one walker per untrapped
site, and the configurational average of the survival probability.

Every configuration ``r`` draws from its own generator, seeded by
``SeedSequence(master_seed, spawn_key=(r,))``, so any single configuration can
be recomputed in isolation and results do not depend on scheduling.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from numpy.typing import NDArray

from .classical import crw_survival_aggregate
from .errors import ConfigurationError
from .walk import HADAMARD, Chirality, CoinSpec, batch_survival

__all__ = [
    "Engine",
    "TrapConfiguration",
    "EnsembleSpec",
    "SurvivalSeries",
    "trap_count",
    "config_rng",
    "sample_traps",
    "run_configuration",
    "ensemble_average",
    "default_workers",
    "parallel_map",
]

WORKERS_ENV = "TRAPWALK_WORKERS"


class Engine:
    QW = "qw"
    CRW = "crw"
    ALL = (QW, CRW)


def trap_count(K: int, rho: float) -> int:
    """``round(rho * K)``, halves rounded up."""
    return int(math.floor(rho * K + 0.5))


@dataclass(frozen=True)
class TrapConfiguration:
    K: int
    trap_sites: tuple[int, ...]
    rho: float
    seed_path: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        sites = tuple(sorted(int(s) for s in self.trap_sites))
        if len(set(sites)) != len(sites):
            raise ConfigurationError("trap sites must be distinct")
        if sites and (sites[0] < 0 or sites[-1] >= self.K):
            raise ConfigurationError(f"trap sites must lie in 0..{self.K - 1}")
        if len(sites) >= self.K:
            raise ConfigurationError("at least one site must be free of traps")
        object.__setattr__(self, "trap_sites", sites)

    @property
    def n(self) -> int:
        return len(self.trap_sites)

    @property
    def rho_actual(self) -> float:
        return self.n / self.K

    def free_sites(self) -> NDArray[np.int64]:
        mask = np.ones(self.K, dtype=bool)
        mask[list(self.trap_sites)] = False
        return np.flatnonzero(mask)


def config_rng(master_seed: int, r: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=(int(r),)))


def sample_traps(K: int, rho: float, rng: np.random.Generator | int, seed_path: tuple[int, ...] = ()) -> TrapConfiguration:
    """Place ``round(rho*K)`` traps uniformly without replacement."""
    if not 0 <= rho < 1:
        raise ConfigurationError(f"rho must satisfy 0 <= rho < 1, got {rho}")
    n = trap_count(K, rho)
    if n >= K:
        raise ConfigurationError(f"rho={rho} puts a trap on every one of the K={K} sites")
    if not isinstance(rng, np.random.Generator):
        seed_path = seed_path or (int(rng),)
        rng = np.random.default_rng(rng)
    sites = rng.choice(K, size=n, replace=False) if n else np.empty(0, dtype=np.int64)
    return TrapConfiguration(K, tuple(int(s) for s in sites), rho, seed_path)


@dataclass(frozen=True)
class EnsembleSpec:
    K: int
    rho: float
    T: int
    M: int
    init: Chirality = Chirality.UP
    engine: str = Engine.QW
    master_seed: int = 0
    coin: CoinSpec = HADAMARD

    def __post_init__(self) -> None:
        object.__setattr__(self, "init", Chirality(self.init))
        if not isinstance(self.K, int) or self.K < 1:
            raise ConfigurationError(f"K must be a positive integer, got {self.K!r}")
        if not 0 <= self.rho < 1:
            raise ConfigurationError(f"rho must satisfy 0 <= rho < 1, got {self.rho!r}")
        if trap_count(self.K, self.rho) >= self.K:
            raise ConfigurationError(f"rho={self.rho} leaves no untrapped site on K={self.K}")
        if not isinstance(self.T, int) or self.T < 1:
            raise ConfigurationError(f"T must be an integer >= 1, got {self.T!r}")
        if not isinstance(self.M, int) or self.M < 1:
            raise ConfigurationError(f"M must be an integer >= 1, got {self.M!r}")
        if self.engine not in Engine.ALL:
            raise ConfigurationError(f"engine must be one of {Engine.ALL}, got {self.engine!r}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigurationError("master_seed must be a 64-bit unsigned integer")

    @property
    def n(self) -> int:
        return trap_count(self.K, self.rho)

    @property
    def rho_actual(self) -> float:
        return self.n / self.K


@dataclass
class SurvivalSeries:
    """Configurational average ``<P(t)>`` for ``t = 0..T``."""

    mean: NDArray[np.float64]
    stderr: NDArray[np.float64]
    spec: EnsembleSpec | None = None
    per_config: NDArray[np.float64] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.stderr = np.asarray(self.stderr, dtype=np.float64)
        if self.mean.shape != self.stderr.shape or self.mean.ndim != 1:
            raise ValueError("mean and stderr must be 1-d arrays of equal length")

    @property
    def times(self) -> NDArray[np.int64]:
        return np.arange(self.mean.size)

    @property
    def T(self) -> int:
        return self.mean.size - 1

    @classmethod
    def from_configs(cls, configs: NDArray[np.float64], spec: EnsembleSpec | None = None, keep: bool = False) -> "SurvivalSeries":
        configs = np.asarray(configs, dtype=np.float64)
        M = configs.shape[0]
        mean = configs.sum(axis=0) / M
        if M > 1:
            stderr = configs.std(axis=0, ddof=1) / np.sqrt(M)
        else:
            stderr = np.zeros_like(mean)
        return cls(mean, stderr, spec, configs if keep else None)


def run_configuration(spec: EnsembleSpec, r: int, traps: TrapConfiguration | None = None) -> NDArray[np.float64]:
    """Walker-averaged survival ``P_r(t)`` for configuration ``r``.

    ``traps`` overrides the sampled configuration; mixed chiralities are still
    drawn from the configuration's own generator.
    """
    rng = config_rng(spec.master_seed, r)
    sampled = sample_traps(spec.K, spec.rho, rng, seed_path=(int(spec.master_seed), int(r)))
    if traps is None:
        traps = sampled
    if traps.K != spec.K:
        raise ConfigurationError("trap configuration does not match the lattice size")
    starts = traps.free_sites()
    if starts.size == 0:
        raise ConfigurationError("no untrapped site to start a walker on")
    if spec.engine == Engine.CRW:
        return crw_survival_aggregate(spec.K, traps.trap_sites, spec.T)
    if spec.init is Chirality.MIXED:
        picks = rng.integers(0, 2, size=starts.size)
        chir = [Chirality.UP if b == 0 else Chirality.DOWN for b in picks]
    else:
        chir = spec.init
    total = batch_survival(spec.K, starts, chir, traps.trap_sites, spec.coin, spec.T)
    return total / starts.size


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigurationError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, value)


def parallel_map(fn: Callable[..., Any], jobs: Sequence[tuple], workers: int | None = None) -> list[Any]:
    """Apply ``fn(*job)`` to every job, returning results in job order."""
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    chunk = max(1, len(jobs) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs), chunksize=chunk))


def ensemble_average(spec: EnsembleSpec, workers: int | None = None, keep_configs: bool = False) -> SurvivalSeries:
    """Average ``P_r(t)`` over configurations ``r = 0..M-1``.

    Per-configuration series are gathered first and reduced in index order, so the
    result is bit-identical for any worker count.
    """
    rows = parallel_map(run_configuration, [(spec, r) for r in range(spec.M)], workers)
    return SurvivalSeries.from_configs(np.vstack(rows), spec, keep=keep_configs)
