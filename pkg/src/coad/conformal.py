"""Conformal p-values and the probabilistic real-data acquisition rule.

A proxy p-value ranks the test score against synthetic calibration scores;
it is cheap but carries no guarantee.  The acquisition rule queries a real
calibration batch with probability 1 - gamma * q, and the resulting active
statistic -- the proxy when no query happened, the inflated real p-value
otherwise -- is superuniform under the null no matter how biased the
synthetic data is.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import clamp_pvalue

# gamma = 1 would make the inflation factor 1/(1-gamma) blow up, so the
# trust parameter is capped just below one.
EPS_GAMMA = 1e-3
GAMMA_MAX = 1.0 - EPS_GAMMA

__all__ = [
    "EPS_GAMMA",
    "GAMMA_MAX",
    "CalibrationBatch",
    "AcquisitionOutcome",
    "conformal_pvalue",
    "acquisition_probability",
    "draw_acquisition",
    "active_pvalue",
    "active_outcome",
]


@dataclass(frozen=True, eq=False)
class CalibrationBatch:
    """A non-empty batch of finite calibration scores, real or synthetic."""

    scores: np.ndarray
    kind: str = "real"

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=float)
        if scores.ndim != 1 or scores.size == 0:
            raise ValueError("calibration batch must be a non-empty 1-D array")
        if not np.isfinite(scores).all():
            raise ValueError("calibration scores must all be finite")
        if self.kind not in ("real", "synthetic"):
            raise ValueError(f"unknown batch kind {self.kind!r}")
        scores.flags.writeable = False
        object.__setattr__(self, "scores", scores)

    def pvalue(self, test_score: float, plus_one: bool = True) -> float:
        return conformal_pvalue(self.scores, test_score, plus_one)


def conformal_pvalue(cal_scores, test_score: float, plus_one: bool = True) -> float:
    """Rank-based p-value of a test score against calibration scores.

    With ``plus_one`` (the default) the statistic is
    (1 + #{i: s_i >= s}) / (n + 1), superuniform for exchangeable scores.
    ``plus_one=False`` drops the offset; the statistic can then hit zero and
    loses the low-tail guarantee (kept only for fidelity experiments).
    Ties count through >=.
    """
    if isinstance(cal_scores, CalibrationBatch):
        cal_scores = cal_scores.scores
    scores = np.asarray(cal_scores, dtype=float)
    if scores.size == 0:
        raise ValueError("calibration batch must be non-empty")
    if not np.isfinite(test_score):
        raise ValueError(f"test score must be finite, got {test_score}")
    count = int(np.count_nonzero(scores >= test_score))
    if plus_one:
        count += 1
    return count / (scores.size + 1)


def _check_gamma(gamma: float) -> None:
    if not 0.0 < gamma <= GAMMA_MAX:
        raise ValueError(f"gamma must lie in (0, {GAMMA_MAX}], got {gamma}")


def acquisition_probability(q: float, gamma: float) -> float:
    """Probability of buying a real calibration batch: 1 - gamma * q."""
    _check_gamma(gamma)
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"proxy p-value must lie in [0, 1], got {q}")
    return 1.0 - gamma * q


def draw_acquisition(q: float, gamma: float, rng: np.random.Generator) -> int:
    """Bernoulli draw of the acquisition indicator; 1 means query real data."""
    return int(rng.random() < acquisition_probability(q, gamma))


def active_pvalue(q: float, u: int, p: float | None, gamma: float) -> float:
    """Combine proxy and (optionally) real p-values into the test statistic.

    Z = q when no real data was acquired, and min(1, p / (1 - gamma))
    otherwise.  The inflation compensates for only querying when the proxy
    already looked suspicious.
    """
    _check_gamma(gamma)
    if u not in (0, 1):
        raise ValueError("acquisition indicator must be 0 or 1")
    if u == 0:
        if p is not None:
            raise ValueError("real p-value present without acquisition")
        return clamp_pvalue(q)
    if p is None:
        raise ValueError("acquisition happened but no real p-value given")
    return clamp_pvalue(p / (1.0 - gamma))


@dataclass(frozen=True)
class AcquisitionOutcome:
    """Full record of one acquisition round: (U, Q, P, Z, gamma)."""

    u: int
    q: float
    p: float | None
    z: float
    gamma: float

    def __post_init__(self) -> None:
        if self.u not in (0, 1):
            raise ValueError("u must be 0 or 1")
        if (self.u == 1) != (self.p is not None):
            raise ValueError("p must be present iff u == 1")


def active_outcome(q: float, gamma: float, rng: np.random.Generator,
                   real_pvalue: Callable[[], float]) -> AcquisitionOutcome:
    """Run one acquisition round.

    ``real_pvalue`` is called only when the Bernoulli draw asks for real
    data, so callers pay for a real batch only when one is used.
    """
    u = draw_acquisition(q, gamma, rng)
    p = float(real_pvalue()) if u else None
    z = active_pvalue(q, u, p, gamma)
    return AcquisitionOutcome(u=u, q=float(q), p=p, z=z, gamma=float(gamma))
