"""Desk-scale experiment presets for each published figure.

Each preset stores the published lattice size, densities, horizon ``T`` and
ensemble size ``M``.  ``M`` (and for the long Fig. 2-4 runs also ``T``) is
reduced by a factor that is always recorded in the spec's ``scale`` block.
"""
from __future__ import annotations

from .experiment import AnalysisOptions, ExperimentSpec

DEFAULT_SEED = 20100807

# densities for the K=101, T=1000 comparison figures; the captions do not list them
_RHO_SWEEP = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
_RHO_LOW = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3]
_INITS = ["up", "mixed", "symmetric"]

# name -> (fields, published_M, published_T, default M factor, T factor)
PRESETS: dict[str, tuple[dict, int, int, float, float]] = {
    "fig2a": ({"K": [101], "rho": [0.05, 0.1, 0.2, 0.3], "init": ["up"], "engine": ["qw"]}, 10000, 20000, 0.01, 0.1),
    "fig2b": ({"K": [101], "rho": [0.05, 0.1, 0.2, 0.3], "init": ["mixed"], "engine": ["qw"]}, 10000, 20000, 0.01, 0.1),
    "fig2c": ({"K": [101], "rho": [0.05, 0.1, 0.2, 0.3], "init": ["symmetric"], "engine": ["qw"]}, 10000, 20000, 0.01, 0.1),
    "fig3": ({"K": [101], "rho": [0.2], "init": _INITS, "engine": ["qw"]}, 10000, 20000, 0.01, 0.1),
    "fig4": ({"K": [101], "rho": _RHO_LOW, "init": _INITS, "engine": ["qw"]}, 10000, 20000, 0.01, 0.1),
    "fig5a": ({"K": [50000], "rho": [0.01, 0.005], "init": ["up"], "engine": ["crw"]}, 100, 2000, 0.5, 1.0),
    "fig5b": ({"K": [50000], "rho": [0.2, 0.5], "init": ["up"], "engine": ["crw"]}, 100, 2000, 0.5, 1.0),
    "fig6a": ({"K": [101], "rho": _RHO_SWEEP, "init": ["up"], "engine": ["crw"]}, 100000, 1000, 0.002, 1.0),
    "fig6b": ({"K": [101], "rho": _RHO_SWEEP, "init": ["up"], "engine": ["qw"]}, 100000, 1000, 0.002, 1.0),
    "fig7": ({"K": [101], "rho": _RHO_SWEEP, "init": ["up"], "engine": ["crw", "qw"]}, 100000, 1000, 0.002, 1.0),
    "fig8": ({"K": [81, 101, 201], "rho": _RHO_SWEEP, "init": ["up"], "engine": ["qw"]}, 100000, 1000, 0.002, 1.0),
}


def figure_presets(
    name: str,
    scale_m: float | None = None,
    scale_t: float | None = None,
    output_dir: str | None = None,
    master_seed: int = DEFAULT_SEED,
) -> ExperimentSpec:
    """Experiment spec reproducing figure ``name`` at reduced ``M`` and ``T``."""
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    fields, published_M, published_T, m_factor, t_factor = PRESETS[name]
    m_factor = m_factor if scale_m is None else float(scale_m)
    t_factor = t_factor if scale_t is None else float(scale_t)
    if not 0 < m_factor <= 1 or not 0 < t_factor <= 1:
        raise ValueError("scale factors must lie in (0, 1]")
    M = max(1, round(published_M * m_factor))
    T = max(1, round(published_T * t_factor))
    return ExperimentSpec(
        name=name,
        K=tuple(fields["K"]),
        rho=tuple(fields["rho"]),
        T=T,
        M=M,
        init=tuple(fields["init"]),
        engine=tuple(fields["engine"]),
        master_seed=master_seed,
        analysis=AnalysisOptions(),
        output_dir=output_dir or f"out/{name}",
        scale={"M_factor": m_factor, "T_factor": t_factor, "published_M": published_M, "published_T": published_T},
    )
