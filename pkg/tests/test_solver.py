import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from msp import solver
from msp.solver import AdditiveSurface, Method, PreconditionError, SurfaceError
from msp.specspace import INFEASIBLE, SpecSpace, compute_msp, grid_from_intervals

from oracles import brute_force_msp, random_surface, subset_sum_min_cardinality

seeds = st.integers(0, 2**32 - 1)


class TestSurface:
    def test_estimate_and_width(self):
        s = AdditiveSurface(1.0, 0.5, (0.2, -0.4, 0.1), (0.1, 0.0, -0.2), {(2, 0): 0.05})
        assert s.estimate((1, 0, 1)) == pytest.approx(1.0 + 0.2 + 0.1 + 0.05)
        assert s.width((1, 0, 1)) == pytest.approx(0.4)

    def test_gamma_keys_canonicalized(self):
        s = AdditiveSurface(1, 1, (0, 0, 0), gamma={(1, 0): 0.5, (0, 1): 0.25, (1, 2): 0})
        assert s.gamma == {(0, 1): 0.75}

    @pytest.mark.parametrize("kwargs", [
        dict(tau0=1, c0=0, delta=(1,)),
        dict(tau0=1, c0=1, delta=()),
        dict(tau0=1, c0=1, delta=(1,), delta_c=(1, 2)),
        dict(tau0=1, c0=1, delta=(1, 2), gamma={(0, 0): 1}),
        dict(tau0=1, c0=1, delta=(1, 2), gamma={(0, 5): 1}),
        dict(tau0=True, c0=1, delta=(1,)),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(SurfaceError):
            AdditiveSurface(**kwargs)

    def test_exact_arithmetic_flag(self):
        assert AdditiveSurface(Fraction(9, 4), Fraction(1, 4), (-3, -5)).exact
        assert not AdditiveSurface(2.25, 0.25, (-3, -5)).exact
        assert AdditiveSurface("9/4", "1/4", ("-3",)).exact

    def test_validate_widths_names_config(self):
        s = AdditiveSurface(1, 0.3, (0, 0), (-0.2, -0.2))
        with pytest.raises(SurfaceError, match="at config 11"):
            s.validate_widths()
        AdditiveSurface(1, 0.5, (0, 0), (-0.2, -0.2)).validate_widths()


class TestGreedyConstant:
    def test_worked_example(self):
        s = AdditiveSurface(2.0, 0.5, (-1.0, -0.6, -0.3, 0.2))
        res = solver.greedy_constant(s)
        assert res.value == 2 and res.witness == (1, 1, 0, 0)
        assert brute_force_msp(s) == 2

    def test_no_opposing_axes(self):
        assert solver.greedy_constant(AdditiveSurface(2.0, 0.5, (0.1, 0.3))).value == INFEASIBLE

    def test_negative_baseline_is_mirrored(self):
        s = AdditiveSurface(-2.0, 0.5, (1.0, 0.6, 0.3, -0.2))
        assert solver.greedy_constant(s).value == 2

    @pytest.mark.parametrize("s,match", [
        (AdditiveSurface(2.0, 0.5, (-1.0,), gamma={}, delta_c=(0.1,)), "half-width varies"),
        (AdditiveSurface(0.4, 0.5, (-1.0,)), "already contains zero"),
        (AdditiveSurface(3.0, 0.5, (-1.2, -0.5)), r"bounded-step condition fails on axes \[0\]"),
        (AdditiveSurface(3.0, 0.5, (-0.5, -0.5), gamma={(0, 1): 0.1}), "interaction"),
    ])
    def test_preconditions(self, s, match):
        with pytest.raises(PreconditionError, match=match):
            solver.greedy_constant(s)

    @given(seeds)
    def test_matches_enumeration(self, seed):
        s = random_surface(np.random.default_rng(seed), K=8, kind="constant")
        try:
            g = solver.greedy_constant(s)
        except PreconditionError:
            return
        assert g.value == solver.enumerate(s).value == brute_force_msp(s)


class TestGreedyVariable:
    def test_reduces_to_constant(self):
        s = AdditiveSurface(2.0, 0.5, (-1.0, -0.6, -0.3, 0.2))
        rep = solver.greedy_variable(s)
        assert rep.msp.value == solver.greedy_constant(s).value
        assert rep.method is Method.GREEDY_VW and rep.greedy_feasible

    def test_widening_axis_counts(self):
        # e = dc - delta: a pure widening axis helps even with no estimate shift
        s = AdditiveSurface(1.0, 0.5, (0.0, -0.1), (0.45, 0.0))
        assert solver.greedy_variable(s).msp.value == 2 == brute_force_msp(s)

    def test_lower_bound_failure_falls_back_exactly(self):
        # single huge opposing step overshoots past -c; two smaller steps land inside
        s = AdditiveSurface(1.0, 0.2, (-3.0, -0.5, -0.4))
        rep = solver.greedy_variable(s)
        assert rep.greedy_feasible is False
        assert rep.msp.value == 2 == brute_force_msp(s)

    def test_tied_prefixes_are_all_tried(self):
        # axes 0 and 1 tie on e = 2.5; only the second keeps the estimate above -c(s)
        s = AdditiveSurface(1.0, 0.2, (-2.0, -1.5), (0.5, 1.0))
        assert brute_force_msp(s) == 1
        rep = solver.greedy_variable(s)
        assert rep.greedy_feasible and rep.msp.value == 1 and rep.msp.witness == (0, 1)

    def test_needs_significant_baseline(self):
        with pytest.raises(PreconditionError, match="baseline significant"):
            solver.greedy_variable(AdditiveSurface(0.1, 0.5, (1.0,)))

    def test_invalid_widths_rejected(self):
        with pytest.raises(PreconditionError, match="negative CI half-width"):
            solver.greedy_variable(AdditiveSurface(2.0, 0.5, (-1.0,), (-0.6,)))

    @given(seeds)
    def test_exact_on_random_surfaces(self, seed):
        s = random_surface(np.random.default_rng(seed), K=int(np.random.default_rng(seed).integers(1, 10)))
        try:
            rep = solver.greedy_variable(s)
        except PreconditionError:
            return
        assert rep.msp.value == brute_force_msp(s)


class TestAutoFeasible:
    def test_small_rho_surface(self):
        s = AdditiveSurface(1.5, 1.0, (-0.076, 0.02), (0.0, 0.01))
        assert solver.diagnostics(s).rho == pytest.approx(0.038)
        assert solver.auto_feasible(s)

    def test_large_rho_surface(self):
        s = AdditiveSurface(3.0, 1.0, (-3.282, 0.2))
        assert solver.diagnostics(s).rho == pytest.approx(1.641)
        assert not solver.auto_feasible(s)
        # the direct lower-bound check can still pass
        assert solver.greedy_variable(s).greedy_feasible

    def test_narrowing_positive_axis(self):
        assert not solver.auto_feasible(AdditiveSurface(2.0, 1.0, (-1.0,), (-0.1,)))

    @given(seeds)
    def test_soundness(self, seed):
        s = random_surface(np.random.default_rng(seed), kind="variable", K=10)
        try:
            auto = solver.auto_feasible(s)
        except PreconditionError:
            return
        if auto:
            assert solver.greedy_variable(s).greedy_feasible


class TestEnumerate:
    def test_two_axis_example(self):
        res = solver.enumerate(AdditiveSurface(1.0, 0.4, (-0.8, -0.8)))
        # (1,1) overshoots to -0.6; (0,1) precedes (1,0) lexicographically
        assert res.value == 1 and res.witness == (0, 1) and res.feasible_count == 2

    def test_baseline_inside_band(self):
        assert solver.enumerate(AdditiveSurface(0.3, 0.4, (1.0, 2.0))).value == 0

    def test_cap(self):
        with pytest.raises(PreconditionError):
            solver.enumerate(AdditiveSurface(1, 1, (0.1,) * 25))

    def test_matches_grid_msp(self):
        s = AdditiveSurface(2.0, 0.5, (-1.0, -0.6, -0.3), (0.1, 0.0, 0.05), {(0, 2): -0.2})
        space = SpecSpace.from_names(["a", "b", "c"])
        g = grid_from_intervals(space, {c: (s.estimate(c) - s.width(c), s.estimate(c) + s.width(c))
                                        for c in space.configs()})
        assert solver.enumerate(s) == compute_msp(g)

    @given(seeds)
    def test_interactions_match_brute_force(self, seed):
        s = random_surface(np.random.default_rng(seed), K=7, interactions=True)
        assert solver.enumerate(s).value == brute_force_msp(s)


class TestBranchAndBound:
    @given(seeds)
    def test_exact_with_interactions(self, seed):
        s = random_surface(np.random.default_rng(seed), K=9, interactions=True)
        assert solver.branch_and_bound(s).msp.value == brute_force_msp(s)

    @given(seeds)
    def test_additive_pruning_exact_without_interactions(self, seed):
        s = random_surface(np.random.default_rng(seed), K=9)
        rep = solver.branch_and_bound(s, use_additive_pruning=True)
        assert rep.msp.value == solver.enumerate(s).value
        assert rep.method is Method.BNB

    def test_additive_pruning_exact_when_interactions_only_hurt(self):
        # every gamma pushes the estimate away from zero, so the additive bound stays admissible
        rng = np.random.default_rng(0)
        for _ in range(200):
            s = random_surface(rng, K=7)
            n = s.normalized()
            gamma = {(k, j): abs(float(rng.normal(0, 0.2))) for k in range(n.K) for j in range(k + 1, n.K)}
            t = AdditiveSurface(n.tau0, n.c0, n.delta, n.delta_c, gamma)
            if not t.tau0 > t.c0:
                continue
            assert solver.branch_and_bound(t, True).msp.value == brute_force_msp(t)

    def test_additive_pruning_can_miss_helpful_interactions(self):
        # gamma pulls the pair into the band although the additive bound says it cannot reach
        s = AdditiveSurface(3.0, 0.5, (-0.5, -0.5, 0.0), gamma={(0, 1): -1.6})
        assert solver.branch_and_bound(s).msp.value == 2
        assert solver.branch_and_bound(s, True).msp.value == INFEASIBLE

    def test_prunes_below_full_tree(self):
        rng = np.random.default_rng(1)
        nodes = [solver.branch_and_bound(random_surface(rng, K=10, kind="constant"), True).nodes_explored
                 for _ in range(50)]
        assert np.mean(nodes) < 2 ** 10

    def test_matches_greedy_variable_when_check_passes(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            s = random_surface(rng, K=8, kind="variable")
            try:
                g = solver.greedy_variable(s)
            except PreconditionError:
                continue
            if g.greedy_feasible:
                assert solver.branch_and_bound(s).msp.value == g.msp.value


class TestDiagnostics:
    def test_rho_example(self):
        assert solver.diagnostics(AdditiveSurface(2.0, 0.5, (-0.9,), (0.1,))).rho == pytest.approx(1.0)

    def test_rho_orientation_invariant(self):
        s = AdditiveSurface(2.0, 0.5, (-0.9, 0.3), (0.1, -0.2))
        assert solver.diagnostics(s).rho == solver.diagnostics(s.negated()).rho

    def test_constant_width_cv_zero(self):
        assert solver.diagnostics(AdditiveSurface(2.0, 0.5, (-1.0, 0.2))).width_cv == 0.0

    @given(seeds)
    def test_width_cv_closed_form_matches_sweep(self, seed):
        s = random_surface(np.random.default_rng(seed), K=6, kind="mixed")
        widths = np.array([float(s.width(c)) for c in SpecSpace.from_names(list("abcdef")).configs()])
        expected = widths.std() / widths.mean()
        assert solver.diagnostics(s).width_cv == pytest.approx(expected, rel=1e-9, abs=1e-12)


class TestFitAdditive:
    def test_exact_recovery(self):
        truth = AdditiveSurface(1.3, 0.4, (-0.7, 0.2, -0.1), (0.05, -0.02, 0.1))
        space = SpecSpace.from_names(["a", "b", "c"])
        g = grid_from_intervals(space, {c: (truth.estimate(c) - truth.width(c),
                                            truth.estimate(c) + truth.width(c)) for c in space.configs()},
                                {c: truth.estimate(c) for c in space.configs()})
        fit, r2, mae = solver.fit_additive(g)
        assert r2 == pytest.approx(1.0) and mae < 1e-12
        np.testing.assert_allclose(fit.delta, truth.delta, atol=1e-10)
        np.testing.assert_allclose(fit.delta_c, truth.delta_c, atol=1e-10)
        assert fit.tau0 == pytest.approx(1.3) and fit.c0 == pytest.approx(0.4)

    def test_interactions_lower_r2(self):
        truth = AdditiveSurface(1.0, 0.4, (-0.7, 0.2), gamma={(0, 1): 0.9})
        space = SpecSpace.from_names(["a", "b"])
        g = grid_from_intervals(space, {c: (truth.estimate(c) - 0.4, truth.estimate(c) + 0.4)
                                        for c in space.configs()})
        _, r2, mae = solver.fit_additive(g)
        assert r2 < 1.0 and mae == pytest.approx(0.9 / 4)

    def test_too_few_configs(self):
        space = SpecSpace.from_names(["a", "b"], admissible={(0, 0), (1, 1)})
        g = grid_from_intervals(space, {(0, 0): (0, 1), (1, 1): (0, 1)})
        with pytest.raises(Exception, match="cannot identify"):
            solver.fit_additive(g)


class TestSubsetSum:
    def test_example(self):
        s = solver.subset_sum_surface((3, 5, 7), 8)
        res = solver.enumerate(s)
        assert res.value == 2 and res.witness == (1, 1, 0)
        assert s.exact

    def test_single_item(self):
        assert solver.enumerate(solver.subset_sum_surface((1,), 1)).value == 1

    def test_unreachable(self):
        assert solver.enumerate(solver.subset_sum_surface((3, 5, 7), 100)).value == INFEASIBLE
        assert subset_sum_min_cardinality((3, 5, 7), 100) is None

    @pytest.mark.parametrize("a,T", [((), 3), ((1, -2), 3), ((1, 2), 0)])
    def test_invalid(self, a, T):
        with pytest.raises(SurfaceError):
            solver.subset_sum_surface(a, T)

    @given(st.lists(st.integers(1, 40), min_size=1, max_size=12), st.integers(1, 150))
    def test_matches_dp_oracle(self, a, T):
        s = solver.subset_sum_surface(a, T)
        oracle = subset_sum_min_cardinality(a, T)
        res = solver.enumerate(s)
        if oracle is None:
            assert res.value == INFEASIBLE
        else:
            assert res.value == oracle
            assert sum(x for x, b in zip(a, res.witness) if b) == T
        assert solver.branch_and_bound(s).msp.value == res.value


class TestSolveDispatch:
    def test_cross_check_agrees(self):
        s = AdditiveSurface(2.0, 0.5, (-1.0, -0.6, -0.3, 0.2))
        reps = solver.solve(s, cross_check=True)
        assert {r.method for r in reps} == {Method.GREEDY_CONST, Method.BNB, Method.ENUM}
        assert {r.msp.value for r in reps} == {2}

    def test_cross_check_skips_inapplicable_greedy(self):
        reps = solver.solve(AdditiveSurface(2.0, 0.5, (-0.5, -0.5), gamma={(0, 1): 0.1}), cross_check=True)
        assert [r.method for r in reps] == [Method.BNB, Method.ENUM]

    def test_precondition_surfaces_verbatim(self):
        with pytest.raises(PreconditionError, match="bounded-step"):
            solver.solve(AdditiveSurface(3.0, 0.5, (-1.2,)), "greedy")

    def test_negative_width_rejected(self):
        with pytest.raises(SurfaceError, match="config 01"):
            solver.solve(AdditiveSurface(1.0, 0.1, (0.0, 0.0), (0.0, -0.5)), "enum")

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            solver.solve(AdditiveSurface(1.0, 0.1, (0.0,)), "magic")

    def test_auto_large_k_uses_bnb(self):
        s = AdditiveSurface(5.0, 0.5, tuple([-0.4] * 20))
        (rep,) = solver.solve(s)
        assert rep.method is Method.BNB and rep.msp.value == math.ceil(4.5 / 0.4)
