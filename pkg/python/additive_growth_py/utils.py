"""Utility functions for the additive growth model toolkit."""

import os
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.stats import norm

from .types import (
    CSV_PRECISION,
    DEFAULT_CONFIDENCE,
    DEFAULT_MAX_RATE,
    DEFAULT_MAX_SITES,
    DEFAULT_NODE_BUDGET,
    DUAL_WARN_TYPES,
    MAX_TABLE_ENTRIES,
    NegativeRate,
    TableTooLarge,
    Verdict,
)


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}") from None
    if value < 0:
        raise ValueError(f"{name} must be non-negative, got {value}")
    return value


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"{name} must be a number, got {raw!r}") from None
    if value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


@dataclass(frozen=True)
class Settings:
    """Process-wide defaults, overridable from the environment or a .env file."""

    seed: int = 0
    threads: int = 1
    max_table_entries: int = MAX_TABLE_ENTRIES
    node_budget: int = DEFAULT_NODE_BUDGET
    max_sites: int = DEFAULT_MAX_SITES
    max_rate: float = DEFAULT_MAX_RATE
    dual_warn_types: int = DUAL_WARN_TYPES

    @classmethod
    def from_env(cls) -> "Settings":
        """Read ``GROWTH_*`` variables, falling back to the built-in defaults."""
        return cls(
            seed=_env_int("GROWTH_SEED", 0),
            threads=max(1, _env_int("GROWTH_THREADS", os.cpu_count() or 1)),
            max_table_entries=_env_int("GROWTH_MAX_TABLE_ENTRIES", MAX_TABLE_ENTRIES),
            node_budget=_env_int("GROWTH_NODE_BUDGET", DEFAULT_NODE_BUDGET),
            max_sites=_env_int("GROWTH_MAX_SITES", DEFAULT_MAX_SITES),
            max_rate=_env_float("GROWTH_MAX_RATE", DEFAULT_MAX_RATE),
            dual_warn_types=_env_int("GROWTH_DUAL_WARN_TYPES", DUAL_WARN_TYPES),
        )


@dataclass(frozen=True)
class ValidationReport:
    """Result of a report-valued check.

    Attributes:
        verdict: ok, fail or inconclusive.
        check: Name of the check that produced the verdict.
        message: Human-readable explanation.
        witness: Offending objects when the verdict is not ok.
    """

    verdict: Verdict
    check: str
    message: str = ""
    witness: Any = None

    @property
    def ok(self) -> bool:
        return self.verdict == Verdict.OK

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "check": self.check,
            "message": self.message,
            "witness": None if self.witness is None else repr(self.witness),
        }


@dataclass(frozen=True)
class PropertyCheck:
    """Boolean property with a counterexample when it fails."""

    holds: bool
    witness: Any = None
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.holds


def validate_rate(rate: float, name: str = "rate") -> None:
    """Validate that a rate or model parameter is a finite non-negative number."""
    if not np.isfinite(rate):
        raise NegativeRate(f"{name} must be finite, got {rate}", witness=name)
    if rate < 0:
        raise NegativeRate(f"{name} must be non-negative, got {rate}", witness=name)


def validate_positive_int(value: int, name: str) -> None:
    """Validate that a count is a positive integer."""
    if int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value}")


def check_table_size(n_types: int, arity: int, limit: int = MAX_TABLE_ENTRIES) -> int:
    """Return ``n_types ** arity`` or raise if it exceeds ``limit``."""
    size = n_types**arity
    if size > limit:
        raise TableTooLarge(
            f"Mapping table would hold {size} entries ({n_types} types on {arity} sites), "
            f"above the limit of {limit}",
            witness=(n_types, arity),
        )
    return size


def radix_weights(n_types: int, arity: int) -> np.ndarray:
    """Weights of the mixed-radix code of a local configuration; site 0 is most significant."""
    return n_types ** np.arange(arity - 1, -1, -1, dtype=np.int64)


def all_configurations(n_types: int, arity: int) -> np.ndarray:
    """Every local configuration in ``F^T``, one row per configuration, in code order."""
    if arity == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.indices((n_types,) * arity, dtype=np.int64).reshape(arity, -1).T


def encode(configs: np.ndarray, n_types: int) -> np.ndarray:
    """Mixed-radix codes of one configuration or a stack of them."""
    configs = np.asarray(configs, dtype=np.int64)
    return configs @ radix_weights(n_types, configs.shape[-1])


def wilson_interval(
    successes: int, trials: int, confidence: float = DEFAULT_CONFIDENCE
) -> tuple[float, float]:
    """Two-sided Wilson score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    z = float(norm.ppf(0.5 + confidence / 2))
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    low, high = max(0.0, centre - half), min(1.0, centre + half)
    # Rounding can push the bound past the point estimate at p = 0 or 1.
    return min(low, p), max(high, p)


def format_float(value: float, precision: int = CSV_PRECISION) -> str:
    """Fixed decimal formatting for CSV outputs."""
    return f"{value:.{precision}f}"


def format_configuration(config, labels=None) -> str:
    """Sparse ``s:site=type`` listing at low occupancy, dense ``d:...`` above 50%."""
    config = np.asarray(config)
    names = labels if labels is not None else [str(i) for i in range(int(config.max(initial=0)) + 1)]
    active = np.flatnonzero(config)
    if 2 * len(active) <= len(config):
        return "s:" + " ".join(f"{int(s)}={names[config[s]]}" for s in active)
    return "d:" + " ".join(names[v] for v in config)


def parse_assignments(items: list[str] | None) -> dict[str, float]:
    """Parse ``name=value`` pairs given on the command line."""
    result = {}
    for item in items or []:
        if "=" not in item:
            raise ValueError(f"Expected name=value, got {item!r}")
        key, value = item.split("=", 1)
        try:
            result[key.strip()] = float(value)
        except ValueError:
            raise ValueError(f"Parameter {key!r} needs a numeric value, got {value!r}") from None
    return result
