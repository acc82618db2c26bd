import numpy as np
import pytest

from swiptcap.channel import ConstraintSet, EhModel, HpaModel
from swiptcap.infometrics import rate_bits
from swiptcap.region import (compare_hpa, energy_bounds, sweep_ask,
                             sweep_onoff, trace_region)
from swiptcap.solver import SolveOptions

from helpers import i0_series


class TestEnergyBounds:
    def test_degenerate_rectifier(self, bypass):
        cs = ConstraintSet(avg_power=1.0, states=((2.0, 1.0),), e_req=1.0)
        floor, top = energy_bounds(cs, bypass, EhModel(b=0.0))
        assert floor == 1.0 and top == pytest.approx(1.0, abs=1e-12)

    def test_nonbinding_power(self, bypass, eh):
        cs = ConstraintSet(avg_power=9.0, states=((2.0, 1.0),), e_req=1.0)
        _, top = energy_bounds(cs, bypass, eh)
        assert top == pytest.approx(i0_series(np.sqrt(2.0)), rel=1e-9)

    def test_low_peak_closed_form(self, bypass, eh):
        cs = ConstraintSet(avg_power=1.0, states=((2.0, 1.0),), e_req=1.0)
        _, top = energy_bounds(cs, bypass, eh)
        assert top == pytest.approx(0.75 + 0.25 * i0_series(np.sqrt(2.0)),
                                    rel=1e-9)


class TestTraceRegion:
    @pytest.fixture(scope="class")
    def curve(self):
        cs = ConstraintSet(avg_power=1.0, states=((3.0, 1.0),), e_req=1.0)
        return trace_region(cs, HpaModel(bypass=True), EhModel(b=0.5, h2=1.0),
                            n_points=6, opts=SolveOptions(dx=0.05))

    def test_first_point_is_unconstrained(self, curve, bypass, eh):
        from swiptcap.solver import build_grid, solve_weights
        cs = ConstraintSet(avg_power=1.0, states=((3.0, 1.0),), e_req=1.0)
        free = solve_weights(build_grid(3.0, 0.05), cs, bypass, eh,
                             SolveOptions(dx=0.05))
        assert curve.points[0].rate_nats == pytest.approx(free.rate, abs=1e-9)

    def test_all_points_certified(self, curve):
        assert all(p.kkt_ok for p in curve.points)

    def test_rate_monotone_nonincreasing(self, curve):
        r = curve.rates
        assert np.all(np.diff(r) <= 1e-6)

    def test_energy_nondecreasing_and_feasible(self, curve):
        e = curve.energies
        assert np.all(np.diff(e) >= -1e-9)
        assert np.all(e >= curve.e_req_values - 1e-8)

    def test_last_point_rate_positive(self, curve):
        assert curve.points[-1].rate_nats > 0.0

    def test_rate_concave_in_energy(self, curve):
        r = curve.rates
        mids = 0.5 * (r[:-2] + r[2:])
        assert np.all(r[1:-1] >= mids - 1e-6)

    def test_bits_column_consistent(self, curve):
        for p in curve.points:
            assert p.rate_bits == pytest.approx(rate_bits(p.rate_nats))

    def test_warm_and_cold_agree(self, bypass, eh):
        cs = ConstraintSet(avg_power=1.0, states=((3.0, 1.0),), e_req=1.0)
        opts = SolveOptions(dx=0.05)
        warm = trace_region(cs, bypass, eh, n_points=5, opts=opts)
        cold = trace_region(cs, bypass, eh, n_points=5, opts=opts,
                            warm_start=False)
        for pw, pc in zip(warm.points, cold.points):
            assert abs(pw.rate_nats - pc.rate_nats) <= 2 * opts.gap_tol

    def test_threads_flag_cold_starts(self, bypass, eh):
        cs = ConstraintSet(avg_power=1.0, states=((3.0, 1.0),), e_req=1.0)
        opts = SolveOptions(dx=0.05)
        seq = trace_region(cs, bypass, eh, n_points=4, opts=opts)
        par = trace_region(cs, bypass, eh, n_points=4, opts=opts, threads=2)
        for ps, pp in zip(seq.points, par.points):
            assert abs(ps.rate_nats - pp.rate_nats) <= 2 * opts.gap_tol

    def test_peak_ordering(self, bypass, eh):
        opts = SolveOptions(dx=0.05)
        cs3 = ConstraintSet(avg_power=1.0, states=((3.0, 1.0),), e_req=1.0)
        _, e_max3 = energy_bounds(cs3, bypass, eh, opts)
        e_vals = np.linspace(1.0, e_max3 - 1e-6 * (e_max3 - 1.0), 4)
        c3 = trace_region(cs3, bypass, eh, 4, opts, e_req_values=e_vals)
        cs5 = ConstraintSet(avg_power=1.0, states=((5.0, 1.0),), e_req=1.0)
        c5 = trace_region(cs5, bypass, eh, 4, opts, e_req_values=e_vals)
        for p3, p5 in zip(c3.points, c5.points):
            assert p3.rate_nats <= p5.rate_nats + 1e-6


class TestCompareHpa:
    def test_mild_hpa_coincides_with_bypass(self, eh):
        # saturation far above the peak: distortion is the identity on [0, A]
        cs = ConstraintSet(avg_power=1.0, states=((2.0, 1.0),), e_req=1.0)
        hpa = HpaModel(a_s=200.0, beta=1.0)
        on, by = compare_hpa(cs, hpa, eh, n_points=4, opts=SolveOptions(dx=0.05))
        for po, pb in zip(on.points, by.points):
            assert abs(po.rate_nats - pb.rate_nats) <= 1e-4

    def test_saturating_hpa_strictly_below(self, eh):
        cs = ConstraintSet(avg_power=1.0, states=((5.0, 1.0),), e_req=1.0)
        hpa = HpaModel(a_s=2.5, beta=1.0)
        on, by = compare_hpa(cs, hpa, eh, n_points=5, opts=SolveOptions(dx=0.05))
        assert [p.e_req for p in on.points] == [p.e_req for p in by.points]
        for po, pb in zip(on.points, by.points):
            assert po.rate_nats <= pb.rate_nats + 1e-9
        mid = len(on.points) // 2
        assert by.points[mid].rate_nats - on.points[mid].rate_nats >= 1e-3

    def test_energy_endpoint_under_hpa_not_larger(self, eh):
        cs = ConstraintSet(avg_power=1.0, states=((5.0, 1.0),), e_req=1.0)
        hpa = HpaModel(a_s=2.5, beta=1.0)
        opts = SolveOptions(dx=0.05)
        _, top_on = energy_bounds(cs, hpa, eh, opts)
        _, top_by = energy_bounds(cs, HpaModel(bypass=True), eh, opts)
        assert top_on <= top_by + 1e-12


class TestSweepAsk:
    def test_ordering_and_gap(self, bypass, eh):
        cs = ConstraintSet(avg_power=1.0, states=((3.0, 1.0),), e_req=1.0)
        curves, unc = sweep_ask(cs, bypass, eh, sizes=(2, 4), n_points=3,
                                opts=SolveOptions(dx=0.05))
        r2 = curves[2].rates
        r4 = curves[4].rates
        ru = unc.rates
        assert np.all(r2 <= r4 + 1e-9)
        # refinement can beat the grid-locked reference by grid-resolution fuzz
        assert np.all(r4 <= ru + 1e-4)
        assert np.all(np.abs(r4 - ru) <= 5e-2)

    def test_degenerate_rectifier_single_point(self, bypass):
        cs = ConstraintSet(avg_power=1.0, states=((2.0, 1.0),), e_req=1.0)
        curves, unc = sweep_ask(cs, bypass, EhModel(b=0.0), sizes=(2,),
                                n_points=3, opts=SolveOptions(dx=0.05))
        assert len(curves[2].points) == 1
        assert len(unc.points) == 1


class TestSweepOnoff:
    def test_dominance_in_p2(self, bypass, eh):
        cs = ConstraintSet(avg_power=1.0, states=((3.0, 1.0),), e_req=1.0)
        curves = sweep_onoff(3.0, (0.5, 0.9), cs, bypass, eh, n_points=3,
                             opts=SolveOptions(dx=0.1))
        lo, hi = curves[0.5].rates, curves[0.9].rates
        assert np.all(lo <= hi + 1e-6)

    def test_p2_one_matches_static_curve(self, bypass, eh):
        cs = ConstraintSet(avg_power=1.0, states=((2.0, 1.0),), e_req=1.0)
        opts = SolveOptions(dx=0.05)
        curves = sweep_onoff(2.0, (1.0,), cs, bypass, eh, n_points=3,
                             opts=opts)
        e_vals = curves[1.0].e_req_values
        static = trace_region(cs, bypass, eh, 3, opts, e_req_values=e_vals)
        for po, ps in zip(curves[1.0].points, static.points):
            assert abs(po.rate_nats - ps.rate_nats) <= 1e-5

    def test_feasible_energy_cap(self, bypass, eh):
        from swiptcap.channel import harvested_energy
        cs = ConstraintSet(avg_power=100.0, states=((2.0, 1.0),), e_req=1.0)
        curves = sweep_onoff(2.0, (0.5,), cs, bypass, eh, n_points=3,
                             opts=SolveOptions(dx=0.05))
        cap = 0.5 * 1.0 + 0.5 * float(harvested_energy(2.0, bypass, eh))
        assert np.all(curves[0.5].e_req_values <= cap + 1e-9)
        assert np.all(curves[0.5].energies <= cap + 1e-9)
