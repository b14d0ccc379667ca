import math

import numpy as np
import pytest

from wigner_lr.errors import InvalidArgument, NoViolationError
from wigner_lr.inequalities import Bipartition, evaluate, theorem1_set, wlr_full_set, wlr_variants
from wigner_lr.qcore import AngleTable, behavior, named_state
from wigner_lr.search import (
    CSV_HEADER,
    OptimizerOptions,
    _equivalent_mod_symmetry,
    certify,
    grid_axis,
    optimize_violation,
    product_grid,
    scan_min_violation,
    theorem3_closed_form,
    threshold_analysis,
    visibility_threshold,
)

FAST = OptimizerOptions(restarts=8, rng_seed=11)


class TestOptions:
    @pytest.mark.parametrize("kw", [{"restarts": 0}, {"max_iterations": 0}, {"simplex_tolerance": 0.0},
                                    {"angle_domain": (1.0, 1.0)}])
    def test_invalid(self, kw):
        with pytest.raises(InvalidArgument):
            OptimizerOptions(**kw)


class TestOptimize:
    def test_reevaluation_and_stationarity(self):
        ineq = theorem1_set()[0]
        psi = named_state("W3")
        rep = optimize_violation(psi, ineq, FAST)
        assert evaluate(ineq, behavior(psi, rep.best_angles)) == pytest.approx(rep.best_value, abs=1e-10)
        assert rep.gradient_norm_at_best < 1e-4
        assert 1 <= rep.restarts_hitting_best <= rep.restarts
        assert np.all(rep.best_angles.alpha < math.pi) and np.all(rep.best_angles.alpha >= 0)

    def test_deterministic(self):
        ineq = wlr_full_set(3)[0]
        a = optimize_violation(named_state("W3"), ineq, FAST)
        b = optimize_violation(named_state("W3"), ineq, FAST)
        assert a.best_value == b.best_value
        np.testing.assert_array_equal(a.best_angles.alpha, b.best_angles.alpha)

    def test_reflection_symmetry_real_state(self):
        # for real states alpha -> pi - alpha on every angle leaves the behavior unchanged
        psi = named_state("W3")
        ineq = theorem1_set()[1]
        rep = optimize_violation(psi, ineq, FAST)
        mirrored = AngleTable(3, math.pi - rep.best_angles.alpha)
        assert evaluate(ineq, behavior(psi, mirrored)) == pytest.approx(rep.best_value, abs=1e-6)

    def test_mismatch(self):
        with pytest.raises(InvalidArgument):
            optimize_violation(named_state("W4"), theorem1_set()[0], FAST)

    def test_warm_start_is_used(self):
        psi = named_state("W3")
        ineq = wlr_full_set(3)[0]
        best = optimize_violation(psi, ineq, FAST)
        warm = optimize_violation(psi, ineq, OptimizerOptions(restarts=1, rng_seed=99),
                                  warm_starts=[best.best_angles.alpha.ravel()])
        assert warm.best_value == pytest.approx(best.best_value, abs=1e-9)


class TestCertify:
    def test_thm1_requires_three(self):
        with pytest.raises(InvalidArgument):
            certify(named_state("W4"), 4, "THM1", FAST)

    def test_party_mismatch(self):
        with pytest.raises(InvalidArgument):
            certify(named_state("W3"), 4, "WLR", FAST)

    def test_product_state(self):
        rep = certify(named_state("GENW3", (math.pi / 2, math.pi / 2)), 3, "WLR", FAST)
        assert not rep.verdict
        assert all(r.best_value <= 1e-6 for r in rep.reports)

    def test_phi_needs_a_relabelled_instance(self):
        # informational: the canonical 2|134 labelling is not violated by PHI_QUAD, s1 = C is
        phi = named_state("PHI_QUAD")
        cut = Bipartition.parse(4, "2|134")
        values = {v.name: optimize_violation(phi, v, FAST).best_value for v in wlr_variants(cut)[:3]}
        assert values["WLR[2|134]"] < 0
        assert values["WLR[2|314]"] == pytest.approx(0.0313, abs=1e-4)

    def test_verdict_is_and(self):
        rep = certify(named_state("W3"), 3, "WLR", FAST)
        assert rep.verdict == all(r.best_value > 1e-7 for r in rep.reports)
        assert rep.to_dict()["cuts"][0]["cut"] == "A|BC"


class TestClosedForm:
    def test_examples(self):
        assert theorem3_closed_form(0.0) == pytest.approx((0.0, 1 / (2 * (1 + math.sqrt(2)))), abs=1e-15)
        assert theorem3_closed_form(math.pi / 2) == pytest.approx((0.0, 0.0), abs=1e-15)
        a, c = theorem3_closed_form(math.pi / 4)
        assert a == pytest.approx((math.sqrt(2) - 1) / 4, abs=1e-12)
        assert c == pytest.approx(0.14039, abs=1e-5)

    def test_domain(self):
        with pytest.raises(InvalidArgument):
            theorem3_closed_form(-0.1)

    def test_symmetry_helper(self):
        ex = (math.pi / 4, -0.3)
        assert _equivalent_mod_symmetry((math.pi / 4 + math.pi, math.pi - 0.3), ex, 1e-9)
        assert _equivalent_mod_symmetry((3 * math.pi / 4, 0.3), ex, 1e-9)
        assert not _equivalent_mod_symmetry((math.pi / 4, 0.3), ex, 1e-3)


class TestThreshold:
    def test_closed_form_oracle(self):
        # white noise enters linearly, so the optimized threshold has a closed form
        psi = named_state("W3")
        ineq = theorem1_set()[0]
        rep = threshold_analysis(psi, ineq, OptimizerOptions(restarts=8, rng_seed=2), probe_restarts=1)
        top = optimize_violation(psi, ineq, OptimizerOptions(restarts=8, rng_seed=2)).best_value
        mixed = sum(t.coefficient for t in ineq.terms) / 8
        assert rep.p_star == pytest.approx(-mixed / (top - mixed), abs=2e-4)
        assert rep.monotone

    def test_no_violation(self):
        with pytest.raises(NoViolationError):
            visibility_threshold(named_state("BISEP3"), theorem1_set()[0], OptimizerOptions(restarts=4))

    def test_requires_pure(self):
        from wigner_lr.qcore import white_noise_mix

        with pytest.raises(InvalidArgument):
            visibility_threshold(white_noise_mix(named_state("W3"), 0.5), "THM1")


class TestScan:
    def test_small_scan_csv(self):
        grid = product_grid([0.0, math.pi / 4], [math.pi / 4, math.pi / 2])
        table = scan_min_violation("GENW3", grid, OptimizerOptions(restarts=3, rng_seed=5))
        csv = table.to_csv().splitlines()
        assert csv[0] == CSV_HEADER
        assert len(csv) == 5
        assert [(r.theta, r.mu) for r in table.rows] == grid
        assert table.lookup(0.0, math.pi / 2).min_violation <= 1e-6

    def test_workers_do_not_change_result(self):
        grid = product_grid([0.3, 0.9], [0.5, 1.2])
        opts = OptimizerOptions(restarts=2, rng_seed=1)
        a = scan_min_violation("GENW3", grid, opts, workers=1)
        b = scan_min_violation("GENW3", grid, opts, workers=2)
        assert a.rows == b.rows

    def test_grid_axis_hits_landmarks(self):
        axis = grid_axis(30)
        for x in (0.0, math.pi / 4, math.pi / 2, math.pi):
            assert min(abs(a - x) for a in axis) < 1e-12

    def test_errors(self):
        with pytest.raises(InvalidArgument):
            scan_min_violation("GENW3", [])
        with pytest.raises(InvalidArgument):
            scan_min_violation("W3", [(0.0, 0.0)])
