"""Decaying-memory evaluation: smoothed FDR, power, and acquisition rate.

Each run owns one tracker; per-timestep ratios are collected into a trace
and traces are averaged pointwise across Monte Carlo runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DecayedSum, decayed_update

__all__ = ["MetricsTracker", "RunTrace", "TraceSummary", "aggregate"]


def _binary(name: str, value) -> int:
    if value not in (0, 1):
        raise ValueError(f"{name} must be 0 or 1, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class MetricsTracker:
    """Decayed masses of false anomalies, detections, hits, anomalies, queries."""

    false_anomalies: DecayedSum
    detections: DecayedSum
    true_detections: DecayedSum
    anomalies: DecayedSum
    acquisitions: DecayedSum
    eta: float = 1.0

    @classmethod
    def fresh(cls, delta: float, eta: float = 1.0) -> "MetricsTracker":
        if eta <= 0.0:
            raise ValueError("eta must be positive")
        zero = DecayedSum(0.0, delta)
        return cls(zero, zero, zero, zero, zero, eta)

    def update(self, decision, truth, acquired) -> "MetricsTracker":
        """Fold one timestep (decision, truth, acquisition flag) in."""
        if truth is None:
            raise ValueError("metrics need ground-truth labels; truth is unknown")
        a_hat = _binary("decision", decision)
        a = _binary("truth", truth)
        u = _binary("acquired", acquired)
        return MetricsTracker(
            false_anomalies=decayed_update(self.false_anomalies, a_hat * (1 - a)),
            detections=decayed_update(self.detections, a_hat),
            true_detections=decayed_update(self.true_detections, a_hat * a),
            anomalies=decayed_update(self.anomalies, a),
            acquisitions=decayed_update(self.acquisitions, u),
            eta=self.eta,
        )

    @property
    def sfdr(self) -> float:
        return self.false_anomalies.value / (self.detections.value + self.eta)

    @property
    def power(self) -> float:
        return self.true_detections.value / (self.anomalies.value + self.eta)

    @property
    def cdar(self) -> float:
        return self.acquisitions.value


@dataclass(frozen=True, eq=False)
class RunTrace:
    """Per-timestep (sfdr, power, cdar) realization of a single run."""

    sfdr: np.ndarray
    power: np.ndarray
    cdar: np.ndarray

    def __post_init__(self) -> None:
        if not (self.sfdr.shape == self.power.shape == self.cdar.shape):
            raise ValueError("trace components must share one length")


@dataclass(frozen=True, eq=False)
class TraceSummary:
    """Pointwise mean and standard error across runs for each metric."""

    sfdr_mean: np.ndarray
    sfdr_se: np.ndarray
    power_mean: np.ndarray
    power_se: np.ndarray
    cdar_mean: np.ndarray
    cdar_se: np.ndarray


def _mean_se(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = rows.mean(axis=0)
    if rows.shape[0] < 2:
        return mean, np.zeros_like(mean)
    se = rows.std(axis=0, ddof=1) / np.sqrt(rows.shape[0])
    return mean, se


def aggregate(traces) -> TraceSummary:
    """Pointwise Monte Carlo mean and standard error over equal-length traces."""
    traces = list(traces)
    if not traces:
        raise ValueError("need at least one trace to aggregate")
    length = traces[0].sfdr.size
    if any(tr.sfdr.size != length for tr in traces):
        raise ValueError("all traces must have the same length")
    sfdr = np.stack([tr.sfdr for tr in traces])
    power = np.stack([tr.power for tr in traces])
    cdar = np.stack([tr.cdar for tr in traces])
    sfdr_mean, sfdr_se = _mean_se(sfdr)
    power_mean, power_se = _mean_se(power)
    cdar_mean, cdar_se = _mean_se(cdar)
    return TraceSummary(sfdr_mean, sfdr_se, power_mean, power_se,
                        cdar_mean, cdar_se)
