"""
Coined discrete-time quantum walk on the K-cycle with perfect absorbing traps.

Sites are 0-based, ``k in range(K)``, with cyclic neighbours ``(k +- 1) % K``.
Amplitudes are stored site-major as ``(K, 2)`` arrays holding
``(psi_up, psi_down)`` per site.  One time step is

    coin  ->  shift (up moves k -> k+1, down moves k -> k-1)  ->  absorb

and survival is recorded after absorption.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError

__all__ = [
    "Chirality",
    "CoinSpec",
    "ChiralAmplitudeField",
    "InitialCondition",
    "HADAMARD",
    "coin_step",
    "shift_step",
    "absorb",
    "walk_trace",
    "evolve_survival",
    "batch_survival",
    "chirality_vector",
]

UNITARY_TOL = 1e-12


class Chirality(str, Enum):
    UP = "up"
    DOWN = "down"
    MIXED = "mixed"
    SYMMETRIC = "symmetric"


def chirality_vector(chirality: Chirality | str) -> NDArray[np.complex128]:
    """Coin-space vector for a pure chirality (``MIXED`` must be resolved first)."""
    chirality = Chirality(chirality)
    if chirality is Chirality.UP:
        return np.array([1.0, 0.0], dtype=np.complex128)
    if chirality is Chirality.DOWN:
        return np.array([0.0, 1.0], dtype=np.complex128)
    if chirality is Chirality.SYMMETRIC:
        return np.array([1.0, 1.0j], dtype=np.complex128) / np.sqrt(2.0)
    raise ConfigurationError("mixed chirality must be resolved to up or down before use")


@dataclass(frozen=True)
class CoinSpec:
    """A 2x2 unitary coin.  Defaults to the Hadamard coin."""

    matrix: NDArray[np.complex128] = field(
        default_factory=lambda: np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)
    )

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.shape != (2, 2):
            raise ConfigurationError(f"coin must be 2x2, got shape {m.shape}")
        dev = np.max(np.abs(m.conj().T @ m - np.eye(2)))
        if dev > UNITARY_TOL:
            raise ConfigurationError(f"coin is not unitary (deviation {dev:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def is_real(self) -> bool:
        return not np.any(self.matrix.imag)


HADAMARD = CoinSpec()


@dataclass(frozen=True)
class InitialCondition:
    start_site: int
    chirality: Chirality = Chirality.UP

    def __post_init__(self) -> None:
        object.__setattr__(self, "chirality", Chirality(self.chirality))

    def resolve(self, rng: np.random.Generator | None = None) -> "InitialCondition":
        """Replace ``MIXED`` by ``UP`` or ``DOWN`` with probability 1/2 each."""
        if self.chirality is not Chirality.MIXED:
            return self
        if rng is None:
            raise ConfigurationError("mixed chirality needs a random generator to resolve")
        pick = Chirality.UP if rng.integers(2) == 0 else Chirality.DOWN
        return InitialCondition(self.start_site, pick)


@dataclass
class ChiralAmplitudeField:
    """Per-site ``(psi_up, psi_down)`` amplitudes of a single walker."""

    amps: NDArray[np.complex128]

    def __post_init__(self) -> None:
        self.amps = np.asarray(self.amps, dtype=np.complex128)
        if self.amps.ndim != 2 or self.amps.shape[1] != 2 or self.amps.shape[0] < 1:
            raise ConfigurationError(f"amplitude field must have shape (K, 2), got {self.amps.shape}")

    @property
    def K(self) -> int:
        return self.amps.shape[0]

    @classmethod
    def localized(cls, K: int, init: InitialCondition) -> "ChiralAmplitudeField":
        if not 0 <= init.start_site < K:
            raise ConfigurationError(f"start site {init.start_site} outside 0..{K - 1}")
        amps = np.zeros((K, 2), dtype=np.complex128)
        amps[init.start_site] = chirality_vector(init.chirality)
        return cls(amps)

    def probabilities(self) -> NDArray[np.float64]:
        """Site occupation ``|psi_up|^2 + |psi_down|^2``."""
        return np.sum(self.amps.real**2 + self.amps.imag**2, axis=1)

    def norm(self) -> float:
        return float(np.sum(self.probabilities()))


def _trap_mask(K: int, traps: Iterable[int] | None) -> NDArray[np.bool_]:
    mask = np.zeros(K, dtype=bool)
    if traps is None:
        return mask
    sites = getattr(traps, "trap_sites", traps)
    trap_K = getattr(traps, "K", K)
    if trap_K != K:
        raise ConfigurationError(f"trap configuration is for K={trap_K}, field has K={K}")
    idx = np.asarray(list(sites), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= K):
        raise ConfigurationError(f"trap sites must lie in 0..{K - 1}")
    mask[idx] = True
    return mask


def coin_step(fld: ChiralAmplitudeField, coin: CoinSpec = HADAMARD) -> ChiralAmplitudeField:
    return ChiralAmplitudeField(fld.amps @ coin.matrix.T)


def shift_step(fld: ChiralAmplitudeField) -> ChiralAmplitudeField:
    out = np.empty_like(fld.amps)
    out[:, 0] = np.roll(fld.amps[:, 0], 1)
    out[:, 1] = np.roll(fld.amps[:, 1], -1)
    return ChiralAmplitudeField(out)


def absorb(fld: ChiralAmplitudeField, traps) -> tuple[ChiralAmplitudeField, float]:
    """Zero the amplitudes on trap sites; return the new field and the mass removed."""
    mask = _trap_mask(fld.K, traps)
    amps = fld.amps.copy()
    removed = float(np.sum(amps[mask].real**2 + amps[mask].imag**2))
    amps[mask] = 0.0
    return ChiralAmplitudeField(amps), removed


def walk_trace(
    init: InitialCondition,
    K: int,
    traps=None,
    coin: CoinSpec = HADAMARD,
    T: int = 0,
    rng: np.random.Generator | None = None,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Step a single walker ``T`` times.

    Returns ``(norm, absorbed)``, both of length ``T + 1``; ``absorbed[t]`` is the
    mass removed during step ``t`` (``absorbed[0] == 0``).
    """
    if T < 0:
        raise ConfigurationError("T must be non-negative")
    mask = _trap_mask(K, traps)
    init = init.resolve(rng)
    if not 0 <= init.start_site < K:
        raise ConfigurationError(f"start site {init.start_site} outside 0..{K - 1}")
    if mask[init.start_site]:
        raise ConfigurationError(f"start site {init.start_site} is a trap")
    fld = ChiralAmplitudeField.localized(K, init)
    trap_sites = np.flatnonzero(mask)
    norm = np.empty(T + 1)
    absorbed = np.zeros(T + 1)
    norm[0] = fld.norm()
    for t in range(1, T + 1):
        fld = shift_step(coin_step(fld, coin))
        fld, absorbed[t] = absorb(fld, trap_sites)
        norm[t] = fld.norm()
    return norm, absorbed


def evolve_survival(
    init: InitialCondition,
    K: int,
    traps=None,
    coin: CoinSpec = HADAMARD,
    T: int = 0,
    rng: np.random.Generator | None = None,
) -> NDArray[np.float64]:
    """Survival probability ``sum_x P(x, t)`` for ``t = 0..T`` of one walker."""
    return walk_trace(init, K, traps, coin, T, rng)[0]


def batch_survival(
    K: int,
    starts: Sequence[int],
    chiralities: Sequence[Chirality | str] | Chirality | str,
    traps=None,
    coin: CoinSpec = HADAMARD,
    T: int = 0,
) -> NDArray[np.float64]:
    """Summed survival of independent walkers, one per entry of ``starts``.

    Equivalent to adding :func:`evolve_survival` over the starts, but all walkers
    are stepped together.  Amplitudes stay real when the coin and every initial
    chirality are real, which halves the work.
    """
    starts = np.asarray(starts, dtype=np.int64)
    B = starts.size
    if isinstance(chiralities, (str, Chirality)):
        chiralities = [chiralities] * B
    if len(chiralities) != B:
        raise ConfigurationError("need one chirality per start site")
    mask = _trap_mask(K, traps)
    if B and (starts.min() < 0 or starts.max() >= K):
        raise ConfigurationError(f"start sites must lie in 0..{K - 1}")
    if np.any(mask[starts]):
        raise ConfigurationError("a walker starts on a trap site")

    vecs = np.array([chirality_vector(c) for c in chiralities]).reshape(B, 2)
    real = coin.is_real and not np.any(vecs.imag)
    dtype = np.float64 if real else np.complex128
    c = coin.matrix.real if real else coin.matrix
    c00, c01, c10, c11 = c[0, 0], c[0, 1], c[1, 0], c[1, 1]

    up = np.zeros((B, K), dtype=dtype)
    dn = np.zeros((B, K), dtype=dtype)
    rows = np.arange(B)
    up[rows, starts] = vecs[:, 0].real if real else vecs[:, 0]
    dn[rows, starts] = vecs[:, 1].real if real else vecs[:, 1]
    new_up = np.empty_like(up)
    new_dn = np.empty_like(dn)
    tmp = np.empty((B, K), dtype=dtype)
    trap_sites = np.flatnonzero(mask)

    out = np.empty(T + 1)
    out[0] = float(B)
    for t in range(1, T + 1):
        # coin then shift, written straight into the shifted slots
        np.multiply(up, c00, out=tmp)
        tmp += c01 * dn
        new_up[:, 1:] = tmp[:, :-1]
        new_up[:, 0] = tmp[:, -1]
        np.multiply(up, c10, out=tmp)
        tmp += c11 * dn
        new_dn[:, :-1] = tmp[:, 1:]
        new_dn[:, -1] = tmp[:, 0]
        new_up[:, trap_sites] = 0.0
        new_dn[:, trap_sites] = 0.0
        up, new_up = new_up, up
        dn, new_dn = new_dn, dn
        if real:
            out[t] = float(np.sum(up * up) + np.sum(dn * dn))
        else:
            out[t] = float(np.sum(up.real**2 + up.imag**2) + np.sum(dn.real**2 + dn.imag**2))
    return out
