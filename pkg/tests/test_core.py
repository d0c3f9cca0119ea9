import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coad.core import (DecayedSum, Observation, clamp_pvalue, decayed_update,
                       decide, features_matrix, observation)


class TestDecide:
    def test_boundary_zero_rejects(self):
        assert decide(0.0, 0.0).reject is True

    def test_maximal_pvalue_never_rejects(self):
        assert decide(1.0, 0.1).reject is False

    def test_equality_rejects(self):
        assert decide(0.05, 0.05).reject is True

    def test_fields_echoed(self):
        d = decide(0.3, 0.5)
        assert d.statistic == 0.3 and d.threshold == 0.5 and d.reject

    @pytest.mark.parametrize("z,alpha", [(-0.1, 0.5), (1.1, 0.5),
                                         (0.5, -0.1), (0.5, 1.5)])
    def test_domain_checks(self, z, alpha):
        with pytest.raises(ValueError):
            decide(z, alpha)

    @given(z1=st.floats(0, 1), z2=st.floats(0, 1), alpha=st.floats(0, 1))
    def test_monotone(self, z1, z2, alpha):
        lo, hi = min(z1, z2), max(z1, z2)
        if decide(hi, alpha).reject:
            assert decide(lo, alpha).reject


class TestDecayedSum:
    def test_hand_expanded_sum(self):
        s = DecayedSum(0.0, 0.95)
        for x in (1.0, 0.0, 1.0):
            s = decayed_update(s, x)
        # expand sum_tau delta^(t - tau) x_tau by hand: 0.95^2 + 1 = 1.9025
        assert math.isclose(s.value, 1.9025, rel_tol=1e-12)

    def test_all_zero_inputs(self):
        s = DecayedSum(0.0, 0.5)
        for _ in range(10):
            s = decayed_update(s, 0.0)
        assert s.value == 0.0

    def test_geometric_limit(self):
        s = DecayedSum(0.0, 0.99)
        for _ in range(5000):
            s = decayed_update(s, 1.0)
        assert abs(s.value - 100.0) < 1e-9

    def test_negative_increment_rejected(self):
        with pytest.raises(ValueError):
            decayed_update(DecayedSum(0.0, 0.9), -0.1)

    @pytest.mark.parametrize("delta", [0.0, 1.0, -0.5, 1.5])
    def test_delta_domain(self, delta):
        with pytest.raises(ValueError):
            DecayedSum(0.0, delta)

    @given(xs=st.lists(st.floats(0, 1), min_size=1, max_size=60),
           delta=st.floats(0.05, 0.99))
    def test_recurrence_equals_closed_form(self, xs, delta):
        s = DecayedSum(0.0, delta)
        for x in xs:
            s = decayed_update(s, x)
        t = len(xs)
        closed = sum(delta ** (t - tau) * x for tau, x in enumerate(xs, start=1))
        assert math.isclose(s.value, closed, rel_tol=1e-12, abs_tol=1e-12)


class TestObservation:
    def test_mask_poisons_features(self):
        obs = Observation(np.array([1.0, 2.0]), np.array([False, True]), 0, None)
        assert np.isnan(obs.features[1]) and obs.features[0] == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            Observation(np.array([1.0, 2.0]), np.array([False]), 0, None)

    def test_empty_vector(self):
        with pytest.raises(ValueError):
            Observation(np.array([]), np.array([], dtype=bool), 0, None)

    def test_bad_truth(self):
        with pytest.raises(ValueError):
            Observation(np.array([1.0]), np.array([False]), 0, 2)

    def test_observed_asserts_on_mask(self):
        obs = observation([1.0, np.nan], 0)
        assert obs.mask[1]
        with pytest.raises(AssertionError):
            obs.observed()

    def test_features_matrix(self):
        rows = [observation([1.0, 2.0], 0), observation([3.0, 4.0], 1)]
        assert features_matrix(rows).shape == (2, 2)

    def test_immutability(self):
        obs = observation([1.0], 0)
        with pytest.raises(ValueError):
            obs.features[0] = 9.0


def test_clamp_pvalue():
    assert clamp_pvalue(1.8) == 1.0
    assert clamp_pvalue(-0.2) == 0.0
    assert clamp_pvalue(0.4) == 0.4
    with pytest.raises(ValueError):
        clamp_pvalue(float("nan"))
