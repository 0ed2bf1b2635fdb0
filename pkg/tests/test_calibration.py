import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from msp.bootstrap import draw_resamples, evaluate_grid
from msp.calibration import (
    OBSERVATIONAL_DISCLAIMER, calibrate, permutation_pvalue, permute_assignment,
    scale_subgrid_msps,
)
from msp.estimation import AnalysisChoice, AxisBinding, Bindings, DataError, Scale
from msp.specspace import INFEASIBLE, SpecSpace, compute_msp

from conftest import make_dataset


class TestPValue:
    def test_add_one_rule(self):
        # observed infeasible, 2 of 200 permutations also infeasible
        perm = [INFEASIBLE] * 2 + [1.0] * 198
        assert permutation_pvalue(INFEASIBLE, perm) == pytest.approx(3 / 201)

    def test_ties_count_toward_tail(self):
        assert permutation_pvalue(1, [0, 1, 1, 2]) == pytest.approx(4 / 5)

    def test_never_zero(self):
        assert permutation_pvalue(INFEASIBLE, [0, 0, 0]) == 0.25

    def test_empty(self):
        with pytest.raises(ValueError):
            permutation_pvalue(1, [])

    @given(st.lists(st.one_of(st.integers(0, 5).map(float), st.just(math.inf)), min_size=1, max_size=50),
           st.one_of(st.integers(0, 5).map(float), st.just(math.inf)))
    def test_bounds(self, perm, obs):
        p = permutation_pvalue(obs, perm)
        assert 1 / (len(perm) + 1) <= p <= 1
        assert p * (len(perm) + 1) == pytest.approx(round(p * (len(perm) + 1)))


class TestPermuteAssignment:
    @given(st.lists(st.integers(0, 1), min_size=1, max_size=40), st.integers(0, 2**32 - 1))
    def test_preserves_treated_count(self, A, seed):
        out = permute_assignment(A, np.random.default_rng(seed))
        assert sorted(out) == sorted(A)

    def test_non_binary(self):
        with pytest.raises(DataError):
            permute_assignment([0, 1, 2], np.random.default_rng(0))


@pytest.fixture
def randomized_data():
    return make_dataset(n=120, seed=3, tau=0.0, confounded=False)


class TestCalibrate:
    def test_report_fields(self, randomized_data, two_axis_setup):
        space, bindings = two_axis_setup
        rep = calibrate(randomized_data, space, bindings, P=19, B=20, seed=5)
        assert len(rep.permuted) == 19 and rep.n_failed == 0
        good = np.array(rep.permuted)
        assert rep.p_hat == permutation_pvalue(rep.observed, good)
        assert rep.perm_infeasible_rate == np.mean(np.isinf(good))
        assert rep.disclaimer is None
        row = rep.table_row()
        assert set(row) == {"observed_msp", "perm_median", "perm_mean_finite",
                            "perm_infeasible_rate", "p_hat", "P", "n_failed"}

    def test_observed_uses_shared_resamples(self, randomized_data, two_axis_setup):
        space, bindings = two_axis_setup
        U = draw_resamples(randomized_data.n, 20, 77)
        rep = calibrate(randomized_data, space, bindings, P=5, U=U)
        grid = evaluate_grid(randomized_data, space, bindings, U)
        assert rep.observed == compute_msp(grid).value

    def test_permutations_match_manual_loop(self, randomized_data, two_axis_setup):
        from msp.rng import substream
        space, bindings = two_axis_setup
        U = draw_resamples(randomized_data.n, 20, 1)
        rep = calibrate(randomized_data, space, bindings, P=4, seed=9, U=U)
        for j, v in enumerate(rep.permuted):
            A = substream(9, "perm", j).permutation(randomized_data.treatment)
            g = evaluate_grid(randomized_data.with_treatment(A), space, bindings, U)
            assert compute_msp(g).value == v

    def test_deterministic_and_worker_invariant(self, randomized_data, two_axis_setup):
        space, bindings = two_axis_setup
        a = calibrate(randomized_data, space, bindings, P=8, B=20, seed=2)
        b = calibrate(randomized_data, space, bindings, P=8, B=20, seed=2, workers=2)
        assert a.permuted == b.permuted and a.p_hat == b.p_hat

    def test_observational_disclaimer(self, randomized_data, two_axis_setup):
        space, bindings = two_axis_setup
        rep = calibrate(randomized_data, space, bindings, P=3, B=20, randomized=False)
        assert rep.disclaimer == OBSERVATIONAL_DISCLAIMER

    def test_failed_replicates_excluded(self, randomized_data, two_axis_setup, monkeypatch):
        import msp.calibration as cal
        real = cal.evaluate_grid
        first = randomized_data.treatment[0]

        def flaky(d, *args, **kwargs):
            if d.treatment[0] != first:
                raise cal.EstimationError("injected failure")
            return real(d, *args, **kwargs)

        monkeypatch.setattr(cal, "evaluate_grid", flaky)
        rep = calibrate(randomized_data, *two_axis_setup, P=30, B=20, seed=0)
        nan = np.isnan(rep.permuted)
        assert 0 < rep.n_failed == nan.sum()
        good = np.array(rep.permuted)[~nan]
        assert rep.p_hat == permutation_pvalue(rep.observed, good)

    def test_rejects_zero_permutations(self, randomized_data, two_axis_setup):
        with pytest.raises(ValueError):
            calibrate(randomized_data, *two_axis_setup, P=0)


class TestScaleSubgrids:
    def test_scale_axis_facets(self, small_data):
        space = SpecSpace.from_names(["add_x1", "log"])
        d = small_data.with_outcome(np.abs(small_data.outcome))
        bindings = Bindings(AnalysisChoice(covariates=("x2",)), {
            "add_x1": AxisBinding("covariates", (), ("x1",)),
            "log": AxisBinding("outcome_scale", Scale.RAW, Scale.LOG1P),
        })
        grid = evaluate_grid(d, space, bindings, draw_resamples(d.n, 30, 0))
        sub = scale_subgrid_msps(grid, bindings)
        assert set(sub) == {"log=RAW", "log=LOG1P"}
        for bit, key in ((0, "log=RAW"), (1, "log=LOG1P")):
            feas = [c for c in space.configs() if c[1] == bit and grid[c].contains_zero]
            expected = min((c[0] for c in feas), default=INFEASIBLE)
            assert sub[key].value == expected

    def test_no_scale_axis(self, small_data, two_axis_setup):
        space, bindings = two_axis_setup
        grid = evaluate_grid(small_data, space, bindings, draw_resamples(small_data.n, 10, 0))
        assert scale_subgrid_msps(grid, bindings) == {}
