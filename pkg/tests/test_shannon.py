import numpy as np
import pytest

from swiptcap.channel import ConstraintSet, EhModel, HpaModel
from swiptcap.errors import ContractError, DomainError, InfeasibleError
from swiptcap.infometrics import mixture_mi
from swiptcap.shannon import (StateAlphabet, build_extended_grid, embed_onoff,
                              escalate_support, solve_extended, solve_onoff)
from swiptcap.solver import SolveOptions, build_grid, prune_support, solve_weights
from swiptcap.verify import kkt_check_extended


class TestStateAlphabet:
    def test_validation(self):
        with pytest.raises(DomainError):
            StateAlphabet(states=((1.0, 0.7), (2.0, 0.7)))
        with pytest.raises(DomainError):
            StateAlphabet(states=((2.0, 0.5), (1.0, 0.5)))

    def test_from_constraints(self):
        cs = ConstraintSet(avg_power=1.0, states=((1.0, 0.4), (2.0, 0.6)))
        assert StateAlphabet.from_constraints(cs).cardinality == 2


class TestBuildExtendedGrid:
    def test_square(self):
        g = build_extended_grid(((1.0, 0.5), (1.0 + 1e-9, 0.5)), 0.5)
        assert g.shape == (9, 2)

    def test_collapsed_first_axis(self):
        g = build_extended_grid(((0.0, 0.5), (2.0, 0.5)), 1.0)
        assert g.tolist() == [[0.0, 0.0], [0.0, 1.0], [0.0, 2.0]]

    def test_rectangular(self):
        g = build_extended_grid(((1.0, 0.5), (2.0, 0.5)), 1.0)
        assert g.shape == (6, 2)

    def test_cardinality_guard(self):
        with pytest.raises(ContractError):
            build_extended_grid(((1.0, 0.3), (2.0, 0.3), (3.0, 0.4)), 0.5)


class TestSolveExtended:
    def test_degenerate_state_matches_static(self, bypass, eh):
        states = ((0.0, 0.0), (2.0, 1.0))
        cs = ConstraintSet(avg_power=1.0, states=states, e_req=1.0)
        r_ext = solve_extended(states, cs, bypass, eh, SolveOptions(dx=0.05))
        cs_s = ConstraintSet(avg_power=1.0, states=((2.0, 1.0),), e_req=1.0)
        r_st = solve_weights(build_grid(2.0, 0.05), cs_s, bypass, eh,
                             SolveOptions(dx=0.05))
        assert abs(r_ext.rate - r_st.rate) <= 1e-5

    def test_identical_peaks_match_static(self, bypass, eh):
        states = ((2.0, 0.5), (2.0 + 1e-9, 0.5))
        cs = ConstraintSet(avg_power=1.0, states=states, e_req=1.0)
        r_ext = solve_extended(states, cs, bypass, eh, SolveOptions(dx=0.1))
        cs_s = ConstraintSet(avg_power=1.0, states=((2.0, 1.0),), e_req=1.0)
        r_st = solve_weights(build_grid(2.0, 0.1), cs_s, bypass, eh,
                             SolveOptions(dx=0.1))
        assert abs(r_ext.rate - r_st.rate) <= 1e-5

    def test_rate_between_static_peaks(self, bypass, eh):
        states = ((1.0, 0.5), (3.0, 0.5))
        cs = ConstraintSet(avg_power=1.0, states=states, e_req=1.0)
        r_ext = solve_extended(states, cs, bypass, eh, SolveOptions(dx=0.1))
        lo = solve_weights(build_grid(1.0, 0.1),
                           ConstraintSet(avg_power=1.0, states=((1.0, 1.0),)),
                           bypass, eh, SolveOptions(dx=0.1))
        hi = solve_weights(build_grid(3.0, 0.1),
                           ConstraintSet(avg_power=1.0, states=((3.0, 1.0),)),
                           bypass, eh, SolveOptions(dx=0.1))
        assert lo.rate - 1e-6 <= r_ext.rate <= hi.rate + 1e-6

    def test_certificate(self, bypass, eh):
        states = ((1.0, 0.5), (2.0, 0.5))
        cs = ConstraintSet(avg_power=1.0, states=states, e_req=1.05)
        res = prune_support(solve_extended(states, cs, bypass, eh,
                                           SolveOptions(dx=0.1)))
        rep = kkt_check_extended(res, states, cs, bypass, eh,
                                 check_step=0.01, tol=1e-4)
        assert rep.verdict

    def test_rate_monotone_in_peak_and_probability(self, bypass, eh):
        opts = SolveOptions(dx=0.1)
        base = ((1.0, 0.5), (2.0, 0.5))
        cs = ConstraintSet(avg_power=1.0, states=base, e_req=1.0)
        r0 = solve_extended(base, cs, bypass, eh, opts).rate
        bigger = ((1.0, 0.5), (3.0, 0.5))
        cs_b = ConstraintSet(avg_power=1.0, states=bigger, e_req=1.0)
        r_peak = solve_extended(bigger, cs_b, bypass, eh, opts).rate
        assert r_peak >= r0 - 1e-6
        luckier = ((1.0, 0.3), (2.0, 0.7))
        cs_l = ConstraintSet(avg_power=1.0, states=luckier, e_req=1.0)
        r_prob = solve_extended(luckier, cs_l, bypass, eh, opts).rate
        assert r_prob >= r0 - 1e-6


class TestSolveOnoff:
    def test_p2_one_reduces_to_static(self, bypass, eh, fig6_constraints):
        r_on = solve_onoff(2.0, 1.0, fig6_constraints, bypass, eh,
                           SolveOptions(dx=0.05))
        r_st = solve_weights(build_grid(2.0, 0.05), fig6_constraints, bypass,
                             eh, SolveOptions(dx=0.05))
        assert abs(r_on.rate - r_st.rate) <= 1e-5

    def test_p2_zero_rate_is_zero(self, bypass, eh, fig6_constraints):
        res = solve_onoff(2.0, 0.0, fig6_constraints, bypass, eh,
                          SolveOptions(dx=0.05))
        assert res.rate == 0.0 and res.energy == 1.0

    def test_p2_zero_with_energy_demand_infeasible(self, bypass, eh):
        cs = ConstraintSet(avg_power=1.0, states=((2.0, 1.0),), e_req=1.1)
        with pytest.raises(InfeasibleError):
            solve_onoff(2.0, 0.0, cs, bypass, eh, SolveOptions(dx=0.05))

    def test_rates_increase_with_p2(self, bypass, eh, fig6_constraints):
        opts = SolveOptions(dx=0.05)
        rates = [solve_onoff(2.0, p2, fig6_constraints, bypass, eh, opts).rate
                 for p2 in (0.3, 0.6, 0.9)]
        assert rates[0] < rates[1] < rates[2]

    def test_agrees_with_extended_zero_peak(self, bypass, eh):
        opts = SolveOptions(dx=0.05)
        states = ((0.0, 0.5), (2.0, 0.5))
        cs_e = ConstraintSet(avg_power=1.0, states=states, e_req=1.05)
        r_ext = prune_support(solve_extended(states, cs_e, bypass, eh, opts))
        cs_o = ConstraintSet(avg_power=1.0, states=((2.0, 1.0),), e_req=1.05)
        r_on = prune_support(solve_onoff(2.0, 0.5, cs_o, bypass, eh, opts))
        assert abs(r_ext.rate - r_on.rate) <= 1e-5
        ext_locs = r_ext.distribution.points[:, 1]
        assert np.allclose(np.sort(ext_locs),
                           np.sort(r_on.distribution.locations), atol=1e-4)

    def test_rate_matches_mixture_mi(self, bypass, eh, fig6_constraints):
        opts = SolveOptions(dx=0.05)
        res = prune_support(solve_onoff(2.0, 0.5, fig6_constraints, bypass,
                                        eh, opts))
        ext = embed_onoff(res.distribution, 0.5)
        assert mixture_mi(ext, ext.states, bypass) == pytest.approx(
            res.rate, abs=1e-9)

    def test_certified(self, bypass, eh, fig6_constraints):
        opts = SolveOptions(dx=0.05)
        res = prune_support(solve_onoff(2.0, 0.5, fig6_constraints, bypass,
                                        eh, opts))
        states = ((0.0, 0.5), (2.0, 0.5))
        rep = kkt_check_extended(res, states, fig6_constraints, bypass, eh,
                                 check_step=0.005, tol=1e-4)
        assert rep.verdict

    def test_p2_domain(self, bypass, eh, fig6_constraints):
        with pytest.raises(DomainError):
            solve_onoff(2.0, 1.5, fig6_constraints, bypass, eh)


class TestEscalateSupport:
    def test_low_peak_terminates_binary(self, bypass, eh):
        states = ((0.0, 0.5), (2.0, 0.5))
        cs = ConstraintSet(avg_power=1.0, states=states, e_req=1.0)
        dist = escalate_support(states, cs, bypass, eh, tol=1e-4,
                                opts=SolveOptions(dx=0.1))
        assert dist.support_size == 2
        # Shannon-strategy seed {(0,0), (a1,a2)} survives as the optimum
        assert np.allclose(dist.points[0], [0.0, 0.0], atol=1e-9)
        assert dist.points[-1][1] == pytest.approx(2.0, abs=0.05)

    def test_matches_product_grid_solver(self, bypass, eh):
        states = ((0.0, 0.5), (2.0, 0.5))
        cs = ConstraintSet(avg_power=1.0, states=states, e_req=1.0)
        opts = SolveOptions(dx=0.1)
        dist = escalate_support(states, cs, bypass, eh, tol=1e-4, opts=opts)
        r_grid = solve_extended(states, cs, bypass, eh, opts)
        assert mixture_mi(dist, states, bypass) == pytest.approx(
            r_grid.rate, abs=1e-4)

    def test_oversized_start_still_certifies(self, bypass, eh):
        states = ((0.0, 0.5), (2.0, 0.5))
        cs = ConstraintSet(avg_power=1.0, states=states, e_req=1.0)
        dist = escalate_support(states, cs, bypass, eh, tol=1e-4, n_start=4,
                                opts=SolveOptions(dx=0.1))
        rep = kkt_check_extended(dist, states, cs, bypass, eh, tol=1e-4)
        assert rep.verdict

    def test_finite_support_regression_bound(self, bypass, eh):
        states = ((1.0, 0.5), (2.0, 0.5))
        cs = ConstraintSet(avg_power=1.0, states=states, e_req=1.05)
        res = prune_support(solve_extended(states, cs, bypass, eh,
                                           SolveOptions(dx=0.1)))
        assert res.distribution.support_size <= 25
