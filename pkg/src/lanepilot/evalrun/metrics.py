"""Autonomy accounting: every intervention charges a flat 5 seconds."""

import warnings
from dataclasses import asdict, dataclass

INTERVENTION_CHARGE_S = 5.0


@dataclass
class InterventionRecord:
    start_s: float
    source: str                    # "human" | "oracle"
    trigger: str
    duration_s: float = INTERVENTION_CHARGE_S  # fixed metric charge
    actual_span_s: float | None = None         # wall span of a human takeover

    def __post_init__(self):
        if self.duration_s != INTERVENTION_CHARGE_S:
            raise ValueError(f"metric charge is fixed at {INTERVENTION_CHARGE_S} s")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AutonomyReport:
    autonomy_pct: float
    interventions: int
    elapsed_s: float
    distance_m: float
    collisions: int

    def to_dict(self) -> dict:
        return asdict(self)


def compute_autonomy(n_interventions: int, elapsed_s: float) -> float:
    """Percentage of time not charged to interventions.

    (1 - n * 5 / elapsed) * 100, evaluated in 64-bit. Values below zero are
    possible when interventions dominate and are reported as-is.
    """
    if elapsed_s <= 0:
        raise ValueError(f"elapsed time must be positive, got {elapsed_s}")
    if n_interventions < 0:
        raise ValueError(f"intervention count must be >= 0, got {n_interventions}")
    value = (1.0 - (n_interventions * INTERVENTION_CHARGE_S) / float(elapsed_s)) * 100.0
    if value < 0:
        warnings.warn(f"autonomy is negative ({value:.2f}%): "
                      f"{n_interventions} interventions in {elapsed_s:.1f} s")
    return value
