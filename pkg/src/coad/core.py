"""Core value types: observations, per-step decisions, and decayed counters.

Everything here is an immutable value object, safe to share across threads
and across independent benchmark runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Additive regularization applied to every fitted variance in this package.
EPS_VAR = 1e-6

__all__ = [
    "EPS_VAR",
    "Observation",
    "Decision",
    "DecayedSum",
    "observation",
    "features_matrix",
    "decide",
    "decayed_update",
    "clamp_pvalue",
]


def clamp_pvalue(value: float) -> float:
    """Clamp a p-value-like statistic to [0, 1].

    Inflated statistics can exceed 1; thresholds never do, so clamping is
    decision-neutral.
    """
    value = float(value)
    if np.isnan(value):
        raise ValueError("p-value is NaN")
    return min(1.0, max(0.0, value))


@dataclass(frozen=True, eq=False)
class Observation:
    """One timestep's input.

    ``features`` is a real vector with NaN in every masked slot; ``mask`` is
    True where the feature is missing.  Masked slots must not be read before
    imputation.  ``truth`` is the ground-truth anomaly label: 0 inlier,
    1 anomaly, None unknown.
    """

    features: np.ndarray
    mask: np.ndarray
    context: int
    truth: int | None = None

    def __post_init__(self) -> None:
        feats = np.array(self.features, dtype=float)
        mask = np.array(self.mask, dtype=bool)
        if feats.ndim != 1 or feats.size < 1:
            raise ValueError("features must be a 1-D vector of length >= 1")
        if mask.shape != feats.shape:
            raise ValueError("features and mask must have equal length")
        if self.context < 0:
            raise ValueError("context id must be non-negative")
        if self.truth not in (None, 0, 1):
            raise ValueError("truth must be 0, 1 or None")
        feats[mask] = np.nan  # poison masked slots until imputation
        feats.flags.writeable = False
        mask.flags.writeable = False
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "mask", mask)

    @property
    def dim(self) -> int:
        return int(self.features.size)

    def observed(self) -> np.ndarray:
        """Feature vector of a fully observed (or already imputed) point."""
        assert not self.mask.any(), "masked observation read before imputation"
        return self.features


def observation(features, context: int = 0, truth: int | None = None,
                mask=None) -> Observation:
    """Build an Observation, inferring the mask from NaNs when omitted."""
    feats = np.asarray(features, dtype=float)
    if mask is None:
        mask = np.isnan(feats)
    return Observation(feats, np.asarray(mask), context, truth)


def features_matrix(observations) -> np.ndarray:
    """Stack fully observed feature vectors into an (m, d) matrix."""
    return np.stack([obs.observed() for obs in observations])


@dataclass(frozen=True)
class Decision:
    """Outcome of one test: reject iff statistic <= threshold."""

    reject: bool
    threshold: float
    statistic: float


def decide(z: float, alpha_t: float) -> Decision:
    """Flag an anomaly iff the statistic does not exceed the threshold."""
    if not 0.0 <= alpha_t <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {alpha_t}")
    if not 0.0 <= z <= 1.0:
        raise ValueError(f"statistic must lie in [0, 1], got {z}")
    return Decision(reject=bool(z <= alpha_t), threshold=float(alpha_t),
                    statistic=float(z))


@dataclass(frozen=True)
class DecayedSum:
    """Exponentially decayed running sum: value' = delta * value + x.

    After t updates with inputs x_1..x_t the value equals
    sum_tau delta^(t - tau) * x_tau; with unit inputs it is bounded by
    1 / (1 - delta).
    """

    value: float = 0.0
    delta: float = 0.99

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.value < 0.0:
            raise ValueError("value must be non-negative")


def decayed_update(s: DecayedSum, x: float) -> DecayedSum:
    """Fold one non-negative increment into the decayed sum."""
    if x < 0.0:
        raise ValueError("increments must be non-negative")
    return DecayedSum(s.delta * s.value + x, s.delta)
