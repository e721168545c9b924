"""Verification-suite plumbing: registry, worker cap, honest failures."""

import numpy as np
import pytest

from warpflow.verify import (
    SUITES,
    closed_form_sphere_slope,
    run_suite,
    symmetric_report,
)


class TestRegistry:
    def test_suite_names(self):
        assert set(SUITES) == {"symmetric", "axisym-k1", "axisym-k2",
                               "identities", "symfunc"}

    def test_unknown_suite(self):
        with pytest.raises(KeyError):
            run_suite("bogus")


class TestClosedFormOracle:
    def test_massless_slope_near_asymptote(self):
        assert abs(closed_form_sphere_slope(0.0) + 1.0) <= 2e-3

    def test_massive_slope_outside_pinned_band(self):
        # the mass term's exp(-3t/2) correction has not died out by t = 3,
        # so the exact solution itself misses the 5% band on [3, 6]
        slope = closed_form_sphere_slope(2.0)
        assert abs(slope + 1.0) > 0.05
        assert -0.95 < slope < -0.90


class TestSymmetricSuite:
    def test_worker_cap_does_not_change_results(self, monkeypatch):
        report1 = symmetric_report(t_end=0.5)
        monkeypatch.setenv("WARPFLOW_THREADS", "4")
        report4 = symmetric_report(t_end=0.5)
        assert [e.claim for e in report1.entries] == [e.claim for e in report4.entries]
        np.testing.assert_array_equal(
            [e.measured for e in report1.entries],
            [e.measured for e in report4.entries])
        assert report1.passed and report4.passed

    def test_full_suite_fails_only_on_documented_claims(self):
        # the two massive-ambient slope claims cannot pass on the pinned
        # window (the exact solution itself misses the band); everything
        # else must be green
        report = symmetric_report()
        failing = sorted(e.claim for e in report.entries if not e.passed)
        assert failing == ["sphere_decay_slope_k1_m2", "sphere_decay_slope_k2_m2"]
        for entry in report.entries:
            if not entry.passed:
                assert "oracle" in entry.note
