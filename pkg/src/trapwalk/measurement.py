"""
Single-walker quantum walk on a finite line window with probabilistic position
measurement.

Each step applies the walk unitary ``U``; with probability ``p`` the position is
then measured and the coin is reset to ``|chi>``:

    Phi' = (1 - p) U Phi U^+  +  p |chi><chi| (x) D[Tr_C U Phi U^+]

``D`` keeps only the position-diagonal part.  With ``diagonal=False`` the full
coin-traced operator is kept instead (the literal double-sum form).

Positions run over ``z = -W..W``; the operator is stored as a
``(2L, 2L)`` matrix with ``L = 2W + 1`` and index ``c * L + (z + W)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import FitError, WindowOverflowError
from .walk import HADAMARD, Chirality, CoinSpec, chirality_vector

__all__ = [
    "DensityOperator",
    "MeasurementSchedule",
    "measurement_step",
    "evolve_density",
    "spread_series",
    "spread_exponent",
]

EDGE_TOL = 1e-12


@dataclass
class DensityOperator:
    W: int
    matrix: NDArray[np.complex128]

    def __post_init__(self) -> None:
        L = 2 * self.W + 1
        self.matrix = np.asarray(self.matrix, dtype=np.complex128)
        if self.matrix.shape != (2 * L, 2 * L):
            raise ValueError(f"matrix must be {(2 * L, 2 * L)} for W={self.W}, got {self.matrix.shape}")

    @property
    def L(self) -> int:
        return 2 * self.W + 1

    @classmethod
    def pure(cls, W: int, chi: Chirality | str | NDArray = Chirality.UP, z: int = 0) -> "DensityOperator":
        L = 2 * W + 1
        vec = chi if isinstance(chi, np.ndarray) else chirality_vector(chi)
        psi = np.zeros(2 * L, dtype=np.complex128)
        psi[z + W] = vec[0]
        psi[L + z + W] = vec[1]
        return cls(W, np.outer(psi, psi.conj()))

    def tensor(self) -> NDArray[np.complex128]:
        """View as ``[c, x, c', y]``."""
        return self.matrix.reshape(2, self.L, 2, self.L)

    def position_marginal(self) -> NDArray[np.float64]:
        d = np.diagonal(self.matrix).real
        return d[: self.L] + d[self.L :]

    def positions(self) -> NDArray[np.int64]:
        return np.arange(-self.W, self.W + 1)

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)


@dataclass(frozen=True)
class MeasurementSchedule:
    """Measurement probability per step ``t >= 1``: constant, or ``1 / t**gamma``."""

    kind: str
    value: float

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "power"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not 0.0 <= self.value <= 1.0:
            name = "p" if self.kind == "constant" else "gamma"
            raise ValueError(f"{name} must lie in [0, 1], got {self.value}")

    @classmethod
    def constant(cls, p: float) -> "MeasurementSchedule":
        return cls("constant", float(p))

    @classmethod
    def power_law(cls, gamma: float) -> "MeasurementSchedule":
        return cls("power", float(gamma))

    def p(self, t: int) -> float:
        if t < 1:
            raise ValueError("schedule is defined for t >= 1")
        if self.kind == "constant":
            return self.value
        return float(t) ** (-self.value)


def _shifted(dst: NDArray, src: NDArray, s_row: int, s_col: int) -> None:
    """``dst[x + s_row, y + s_col] = src[x, y]`` for 2-d blocks with empty borders."""
    rs = (slice(1, None), slice(None, -1)) if s_row == 1 else (slice(None, -1), slice(1, None))
    cs = (slice(1, None), slice(None, -1)) if s_col == 1 else (slice(None, -1), slice(1, None))
    dst[rs[0], cs[0]] = src[rs[1], cs[1]]


def _step_block(R: NDArray, p: float, chi: NDArray, C: NDArray, diagonal: bool) -> NDArray:
    """Apply one channel step to a ``(2, b, 2, b)`` block whose border sites are empty."""
    Cc = C.conj()
    A = np.empty_like(R)
    A[0] = C[0, 0] * R[0] + C[0, 1] * R[1]
    A[1] = C[1, 0] * R[0] + C[1, 1] * R[1]
    B = np.zeros_like(R)
    shift = (1, -1)  # up moves +1, down moves -1
    for c in (0, 1):
        right = A[:, :, 0] * Cc[c, 0] + A[:, :, 1] * Cc[c, 1]
        for a in (0, 1):
            _shifted(B[a, :, c, :], right[a], shift[a], shift[c])
    if p == 0.0:
        return B
    traced = B[0, :, 0, :] + B[1, :, 1, :]
    if diagonal:
        traced = np.diag(np.diagonal(traced))
    proj = np.outer(chi, chi.conj())
    if p == 1.0:
        return proj[:, None, :, None] * traced[None, :, None, :]
    B *= 1.0 - p
    for a in (0, 1):
        for c in (0, 1):
            B[a, :, c, :] += (p * proj[a, c]) * traced
    return B


def _support(marginal: NDArray, W: int) -> tuple[int, int]:
    nz = np.flatnonzero(marginal)
    if nz.size == 0:
        return W, W
    return int(nz[0]), int(nz[-1])


def _check_edges(marginal: NDArray) -> None:
    edge = marginal[:2].sum() + marginal[-2:].sum()
    if edge > EDGE_TOL:
        raise WindowOverflowError(f"mass {edge:.3e} within one site of the window edge; enlarge W")


def measurement_step(
    phi: DensityOperator,
    p: float,
    reset_chirality: Chirality | str | NDArray = Chirality.UP,
    coin: CoinSpec = HADAMARD,
    diagonal: bool = True,
) -> DensityOperator:
    """One step of the position-measurement channel with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    chi = reset_chirality if isinstance(reset_chirality, np.ndarray) else chirality_vector(reset_chirality)
    marginal = phi.position_marginal()
    _check_edges(marginal)
    lo, hi = _support(marginal, phi.W)
    lo, hi = lo - 1, hi + 2
    out = np.zeros_like(phi.matrix)
    src = phi.tensor()
    dst = out.reshape(2, phi.L, 2, phi.L)
    dst[:, lo:hi, :, lo:hi] = _step_block(src[:, lo:hi, :, lo:hi], p, chi, coin.matrix, diagonal)
    return DensityOperator(phi.W, out)


def evolve_density(
    chi: Chirality | str,
    T: int,
    schedule: MeasurementSchedule,
    W: int | None = None,
    coin: CoinSpec = HADAMARD,
    diagonal: bool = True,
    reset_chirality: Chirality | str | None = None,
    keep: bool = False,
):
    """Run ``T`` channel steps from ``|chi, 0>``.

    Returns ``(phi_T, marginals)`` where ``marginals[t]`` is the position
    distribution after ``t`` steps.  With ``keep=True`` the list of all
    intermediate operators is returned as a third element.
    """
    W = T + 2 if W is None else W
    if W < T + 2:
        raise WindowOverflowError(f"W={W} is too small for T={T}; need W >= T + 2")
    chi_vec = chirality_vector(chi if reset_chirality is None else reset_chirality)
    phi = DensityOperator.pure(W, chi)
    L = phi.L
    marginals = np.empty((T + 1, L))
    marginals[0] = phi.position_marginal()
    history = [DensityOperator(W, phi.matrix.copy())] if keep else None
    buf = phi.tensor()
    for t in range(1, T + 1):
        # support after t-1 steps is |z| <= t-1; the block keeps one empty site each side
        lo, hi = W - t, W + t + 1
        buf[:, lo:hi, :, lo:hi] = _step_block(buf[:, lo:hi, :, lo:hi], schedule.p(t), chi_vec, coin.matrix, diagonal)
        marginals[t] = phi.position_marginal()
        if keep:
            history.append(DensityOperator(W, phi.matrix.copy()))
    if keep:
        return phi, marginals, history
    return phi, marginals


def spread_series(
    schedule: MeasurementSchedule,
    T: int,
    chi: Chirality | str = Chirality.UP,
    W: int | None = None,
    coin: CoinSpec = HADAMARD,
    diagonal: bool = True,
) -> NDArray[np.float64]:
    """Standard deviation of the position distribution for ``t = 0..T``."""
    W = T + 2 if W is None else W
    _, marg = evolve_density(chi, T, schedule, W, coin, diagonal)
    z = np.arange(-W, W + 1, dtype=np.float64)
    mass = marg.sum(axis=1)
    mu = marg @ z / mass
    var = marg @ (z * z) / mass - mu**2
    return np.sqrt(np.maximum(var, 0.0))


def spread_exponent(
    schedule: MeasurementSchedule,
    T: int,
    chi: Chirality | str = Chirality.UP,
    W: int | None = None,
    coin: CoinSpec = HADAMARD,
    diagonal: bool = True,
) -> float:
    """Least-squares slope of ``log sigma(t)`` against ``log t`` over ``t in [T/4, T]``."""
    if T < 50:
        raise ValueError("spread exponent needs T >= 50")
    sigma = spread_series(schedule, T, chi, W, coin, diagonal)
    t = np.arange(math.ceil(T / 4), T + 1)
    s = sigma[t]
    if np.any(s <= 0):
        raise FitError("position distribution has zero spread")
    slope, _ = np.polyfit(np.log(t), np.log(s), 1)
    return float(slope)
