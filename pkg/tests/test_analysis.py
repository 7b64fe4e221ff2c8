import json

import numpy as np
import pytest

from asyncons.analysis import (
    analyze,
    discrepancy_report,
    probe_leaderless_agreement,
    verify_theorem1_empirically,
)
from asyncons.exceptions import StructureError
from asyncons.sim import DelayModel, monte_carlo


def eig_mu(F):
    w, V = np.linalg.eig(F.T)
    v = np.real(V[:, np.argmin(np.abs(w - 1))])
    return v / v.sum()


class TestAnalyze:
    def test_example1(self, F1, x0):
        r = analyze(F1, x0)
        assert r.leaders == () and r.m == 0
        assert r.has_spanning_tree and not r.is_m_rooted_leader_form
        assert r.rho_margin == pytest.approx(0.83, abs=0.01)
        assert r.async_reachable and not r.theorem1_applies
        np.testing.assert_allclose(r.mu, [0.32, 0.35, 0.02, 0.14, 0.17], atol=0.005)
        assert r.predicted_sync_value == pytest.approx(eig_mu(F1) @ x0, abs=1e-10)
        assert any("no leader" in n for n in r.notes)

    def test_example2(self, F2, x0):
        r = analyze(F2, x0)
        assert r.leaders == (0, 3) and r.m == 2
        assert r.theorem1_applies
        assert r.rho_margin < 1
        assert r.predicted_sync_value == pytest.approx(3, abs=1e-10)
        # leader rows of F* x0 reproduce the leaders' own initial values exactly
        assert r.predicted_limits[0] == x0[0] and r.predicted_limits[3] == x0[3]

    def test_leaders_disagree(self, F2):
        x0 = np.array([1.0, 0, 0, 2.0, 0])
        r = analyze(F2, x0)
        assert r.predicted_sync_value is None
        assert any("fixed-point" in n for n in r.notes)
        assert r.predicted_limits.min() >= 1 - 1e-12 and r.predicted_limits.max() <= 2 + 1e-12

    def test_identity(self):
        r = analyze(np.eye(2), [1.0, 2.0])
        assert r.leaders == (0, 1) and r.theorem1_applies
        np.testing.assert_array_equal(r.predicted_limits, [1.0, 2.0])
        assert r.rho_margin == pytest.approx(0, abs=1e-10)

    def test_periodic_not_certified(self):
        r = analyze(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert r.stationary is None and not r.theorem1_applies
        assert any("stationary" in n for n in r.notes)

    def test_to_dict_is_json(self, F2, x0):
        d = analyze(F2, x0).to_dict()
        assert d["leaders"] == [1, 4]
        text = json.dumps(d)
        assert json.loads(text)["m"] == 2
        assert all(type(d[k]) is bool for k in ("has_spanning_tree", "theorem1_applies"))

    def test_bad_x0(self, F1):
        with pytest.raises(ValueError):
            analyze(F1, [1.0, 2.0])


class TestEquivalenceCheck:
    def test_synchronous_depth(self, F2):
        v = verify_theorem1_empirically(F2, 0, depth=200)
        assert v.passed and v.exhaustive

    def test_requires_leader_form(self, F1):
        with pytest.raises(StructureError):
            verify_theorem1_empirically(F1, 1)

    def test_counterexample_reported(self):
        F = np.array([[1.0, 0.0], [0.4, 0.6]])
        v = verify_theorem1_empirically(F, 1, depth=6, tol=1e-6)
        assert not v.passed and v.exhaustive and v.chains_checked == 2**6
        # Worst case sits in the delayed block row: the follower keeps 0.6**5 on
        # itself plus 0.4 * 0.6**4 on the stale leader copy, 0.6**4 in total.
        assert v.max_deviation == pytest.approx(0.6**4, rel=1e-12)
        assert len(v.counterexample) == 6

    def test_exhaustive_matches_brute_force(self):
        F = np.array([[1.0, 0.0, 0.0], [0.3, 0.5, 0.2], [0.0, 0.4, 0.6]])
        from asyncons.switched import enumerate_modes, synchronous_lift
        import itertools
        modes = [m.matrix for m in enumerate_modes(F, 1)]
        target = synchronous_lift(np.outer(np.ones(3), [1, 0, 0]), 1)
        worst = 0.0
        for seq in itertools.product(modes, repeat=4):
            P = np.eye(6)
            for W in seq:
                P = W @ P
            worst = max(worst, float(np.abs(P - target).max()))
        v = verify_theorem1_empirically(F, 1, depth=4, tol=1.0)
        assert v.exhaustive and v.max_deviation == pytest.approx(worst, abs=1e-14)

    def test_example2_sampled(self, F2):
        v = verify_theorem1_empirically(F2, 2, chains=10, depth=300, exhaustive=False)
        assert v.passed and not v.exhaustive and v.chains_checked == 10


class TestDiscrepancy:
    def test_identical(self, F2, x0):
        ens = monte_carlo(F2, x0, DelayModel("none"), 3, 300)
        d = discrepancy_report(ens.values[0], ens)
        assert d["max_abs_deviation"] == 0.0
        assert d["fraction_within"] == 1.0
        assert sum(d["histogram"]["counts"]) == 3

    def test_example1_spread(self, F1, x0):
        ens = monte_carlo(F1, x0, DelayModel("uniform", 5, 1), 20, 1000)
        d = discrepancy_report(float(eig_mu(F1) @ x0), ens, bins=5)
        assert d["max_abs_deviation"] > 1e-3
        assert len(d["histogram"]["edges"]) == 6
        json.dumps(d)


def test_probe_leaderless_smoke():
    found = probe_leaderless_agreement(3, trials=3, samples=4, steps=800, seed=1)
    for F, spread in found:
        assert F.shape == (3, 3) and spread <= 1e-6


def test_exhaustive_paths_agree(monkeypatch):
    from asyncons import analysis
    F = np.array([[1.0, 0.0, 0.0], [0.3, 0.5, 0.2], [0.0, 0.4, 0.6]])
    a = verify_theorem1_empirically(F, 1, depth=6, tol=1.0)
    monkeypatch.setattr(analysis, "DISTINCT_CAP", 0)
    b = verify_theorem1_empirically(F, 1, depth=6, tol=1.0)
    assert a.exhaustive and b.exhaustive and a.chains_checked == b.chains_checked == 8**6
    assert a.max_deviation == pytest.approx(b.max_deviation, abs=1e-14)


def test_exhaustive_cap(monkeypatch):
    from asyncons import analysis
    F = np.array([[1.0, 0.0, 0.0], [0.3, 0.5, 0.2], [0.0, 0.4, 0.6]])
    monkeypatch.setattr(analysis, "DISTINCT_CAP", 0)
    with pytest.raises(ValueError, match="cap"):
        verify_theorem1_empirically(F, 1, depth=40, exhaustive=True)
    v = verify_theorem1_empirically(F, 1, chains=3, depth=40, tol=1e-3)
    assert not v.exhaustive and v.chains_checked == 3


@pytest.mark.parametrize("depth", [3, 7, 10])
def test_single_follower_worst_case_brute_force(depth):
    import itertools
    f = 0.4
    F = np.array([[1.0, 0.0], [f, 1 - f]])
    fresh = np.array([[1, 0, 0, 0], [f, 1 - f, 0, 0], [1, 0, 0, 0], [0, 1, 0, 0.0]])
    stale = np.array([[1, 0, 0, 0], [0, 1 - f, f, 0], [1, 0, 0, 0], [0, 1, 0, 0.0]])
    target = np.array([[1, 0, 0, 0], [1, 0, 0, 0], [1, 0, 0, 0], [1, 0, 0, 0.0]])
    worst = 0.0
    for seq in itertools.product([fresh, stale], repeat=depth):
        P = np.eye(4)
        for W in seq:
            P = W @ P
        worst = max(worst, float(np.abs(P - target).max()))
    assert worst == pytest.approx((1 - f) ** (depth - 2), rel=1e-12)
    v = verify_theorem1_empirically(F, 1, depth=depth, tol=1.0)
    assert v.max_deviation == pytest.approx(worst, rel=1e-12)
