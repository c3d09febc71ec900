"""Crypto portfolio risk engine: moments, stress, hedging, contagion and Monte Carlo."""

import json as _json

from ._core import (
    CryptoriskError,
    MomentEstimates,
    PortfolioSpec,
    analytic_oracle,
    apply_hedge,
    cholesky,
    correlation_network_propagate,
    estimate_moments,
    load_prices,
    make_moments,
    portfolio_metrics,
    risk_metrics,
    simulate_paths,
    stress_test,
    __version__,
)
from . import _core


def run_scenario(config_path, seed=None, out_dir=None, write=False):
    """Runs a scenario file and returns the parsed report document."""
    return _json.loads(_core.run_scenario(str(config_path), seed, None if out_dir is None else str(out_dir), write))


__all__ = [
    "CryptoriskError",
    "MomentEstimates",
    "PortfolioSpec",
    "analytic_oracle",
    "apply_hedge",
    "cholesky",
    "correlation_network_propagate",
    "estimate_moments",
    "load_prices",
    "make_moments",
    "portfolio_metrics",
    "risk_metrics",
    "run_scenario",
    "simulate_paths",
    "stress_test",
]
