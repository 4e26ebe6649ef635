import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import opstab.weights as W
from opstab.errors import DescriptorError, DomainError
from opstab.grids import DyadicGrid

# exact sups over all intervals (shape-scan closed forms; see ledgered oracle)
A2_SQRT_TRUE = 1.5            # A_2(|x|^{1/2})
A1_INVSQRT_TRUE = 1.0 + math.sqrt(2.0)   # A_1(|x|^{-1/2})


@pytest.fixture(scope="module")
def family():
    rng = np.random.Generator(np.random.PCG64(42))
    return W.default_cube_family(1, 8.0, rng, levels=range(0, 7), n_random=200)


@pytest.fixture(scope="module")
def w_sqrt():
    return W.WeightSpec.power(0.5, d=1)


@pytest.fixture(scope="module")
def w_invsqrt():
    return W.WeightSpec.power(-0.5, d=1)


class TestApEstimate:
    def test_trivial_weight_is_one(self, family):
        est = W.ap_bound_estimate(W.WeightSpec.trivial(1), 2.0, family)
        assert est.value == pytest.approx(1.0, abs=1e-12)

    def test_centered_cube_quotient_exact(self, w_sqrt):
        for h in (0.25, 1.0, 4.0):
            q = W._ap_quotient(w_sqrt, 2.0, W.Cube((0.0,), 2 * h))
            assert q == pytest.approx(4.0 / 3.0, rel=1e-12)

    def test_one_sided_cube_same_quotient(self, w_sqrt):
        q = W._ap_quotient(w_sqrt, 2.0, W.Cube((0.5,), 1.0))
        assert q == pytest.approx(4.0 / 3.0, rel=1e-12)

    def test_family_estimate_approaches_true_sup(self, w_sqrt, family):
        est = W.ap_bound_estimate(w_sqrt, 2.0, family)
        # sup over asymmetric origin cubes is 3/2, strictly above centered 4/3
        assert 4.0 / 3.0 < est.value <= A2_SQRT_TRUE + 1e-9
        assert est.value == pytest.approx(A2_SQRT_TRUE, abs=0.05)
        assert est.is_lower_bound

    def test_p1_estimate(self, w_invsqrt, family):
        est = W.ap_bound_estimate(w_invsqrt, 1.0, family)
        assert 2.0 < est.value <= A1_INVSQRT_TRUE + 1e-9

    def test_boundary_alpha_not_ap(self, family):
        est = W.ap_bound_estimate(W.WeightSpec.power(1.0, d=1), 2.0, family)
        assert est.not_ap and est.value == math.inf

    def test_power_admissibility_thresholds(self):
        # refine toward the origin: admissible alpha stays bounded,
        # inadmissible alpha crosses any threshold
        fine = [W.Cube((2.0 ** -k / 2,), 2.0 ** -k) for k in range(0, 40)]
        est_in = W.ap_bound_estimate(W.WeightSpec.power(0.9, d=1), 2.0, fine)
        assert est_in.value < 1e3
        est_out = W.ap_bound_estimate(W.WeightSpec.power(1.0, d=1), 2.0, fine)
        assert est_out.value > 1e3
        est_w_blows = W.ap_bound_estimate(W.WeightSpec.power(-1.2, d=1), 2.0, fine)
        assert est_w_blows.value > 1e3

    def test_monotone_under_family_growth(self, w_sqrt, family):
        small = W.ap_bound_estimate(w_sqrt, 2.0, family[:100]).value
        big = W.ap_bound_estimate(w_sqrt, 2.0, family).value
        assert big >= small

    def test_admissible_closed_form(self):
        assert W.WeightSpec.power(0.5, d=1).admissible(2.0)
        assert not W.WeightSpec.power(1.0, d=1).admissible(2.0)
        assert W.WeightSpec.power(-0.5, d=1).admissible(1.0)
        assert not W.WeightSpec.power(0.5, d=1).admissible(1.0)
        assert W.WeightSpec.trivial(1).admissible(3.0)


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(-0.9, 0.9), p=st.sampled_from([1.0, 1.5, 2.0, 3.0]),
       center=st.floats(-4, 4), side=st.floats(0.05, 4.0))
def test_jensen_floor(alpha, p, center, side):
    if p == 1.0 and alpha > 0:
        alpha = -alpha  # keep within the admissible p=1 range
    w = W.WeightSpec.power(alpha, d=1)
    q = W._ap_quotient(w, p, W.Cube((center,), side))
    assert q >= 1.0 - 1e-9


class TestDiscretize:
    def test_trivial(self):
        g = DyadicGrid(1, 2, 4.0)
        dw = W.discretize_weight(W.WeightSpec.trivial(1), g)
        assert np.allclose(dw.values, 1.0)

    def test_abs_weight_level0(self):
        g = DyadicGrid(1, 0, 4.0)
        dw = W.discretize_weight(W.WeightSpec.power(1.0, d=1), g)
        assert dw.values[g.index_of([0])] == pytest.approx(0.25, rel=1e-14)
        assert dw.values[g.index_of([1])] == pytest.approx(1.0, rel=1e-14)

    def test_sqrt_weight_closed_form_vs_quadrature(self):
        g = DyadicGrid(1, 2, 2.0)
        dw = W.discretize_weight(W.WeightSpec.power(0.5, d=1), g)
        h = g.h
        from scipy.integrate import quad
        oracle, _ = quad(lambda x: abs(x) ** 0.5, -h / 2, h / 2,
                         points=[0.0], epsabs=1e-14)
        assert dw.values[g.index_of([0])] == pytest.approx(oracle / h, rel=1e-8)

    def test_d2_power(self):
        g = DyadicGrid(2, 1, 1.0)
        dw = W.discretize_weight(W.WeightSpec.power(0.5, d=2), g)
        assert np.all(dw.values > 0)


class TestDiscreteAp:
    def test_trivial_is_one(self):
        g = DyadicGrid(1, 2, 4.0)
        dw = W.discretize_weight(W.WeightSpec.trivial(1), g)
        assert W.discrete_ap_bound(dw, 2.0, 8).value == pytest.approx(1.0)

    @pytest.mark.parametrize("alpha,p", [(0.5, 2.0), (-0.5, 1.0)])
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_dominated_by_continuous_estimate(self, alpha, p, n, family):
        w = W.WeightSpec.power(alpha, d=1)
        cont = W.ap_bound_estimate(w, p, family).value
        dw = W.discretize_weight(w, DyadicGrid(1, n, 8.0))
        disc = W.discrete_ap_bound(dw, p, 16).value
        assert disc <= cont + 1e-6

    def test_p1_finite(self):
        g = DyadicGrid(1, 3, 4.0)
        dw = W.discretize_weight(W.WeightSpec.power(-0.5, d=1), g)
        v = W.discrete_ap_bound(dw, 1.0, 16).value
        assert math.isfinite(v) and v >= 1.0


class TestBmo:
    def test_trivial_is_zero(self, family):
        assert W.bmo_norm_estimate(W.WeightSpec.trivial(1), family[:50]) == 0.0

    def test_one_sided_cube_oracle(self, w_sqrt):
        # on [0,h): avg |(1/2) ln|x| - c| = (1/2) * (2/e) = 1/e exactly
        got = W.bmo_norm_estimate(w_sqrt, [W.Cube((0.5,), 1.0)])
        assert got == pytest.approx(1.0 / math.e, rel=1e-9)

    def test_family_estimate_matches_shape_scan(self, w_sqrt, family):
        # independent oracle: scan asymmetric origin cubes [-s, 1-s] by
        # adaptive quadrature (scale invariance); sup ~ 0.46529 at s ~ 0.121
        from scipy.integrate import quad

        def shape(s):
            c, _ = quad(lambda x: 0.5 * math.log(abs(x)), -s, 1 - s,
                        points=[0.0], epsabs=1e-13)
            r = math.exp(2.0 * c)
            pts = sorted(v for v in (-r, 0.0, r) if -s < v < 1 - s)
            v, _ = quad(lambda x: abs(0.5 * math.log(abs(x)) - c), -s, 1 - s,
                        points=pts, epsabs=1e-12, limit=200)
            return v

        oracle = max(shape(s) for s in np.linspace(0.02, 0.5, 49))
        got = W.bmo_norm_estimate(w_sqrt, family)
        assert 1.0 / math.e < got <= oracle + 1e-6
        assert got == pytest.approx(oracle, rel=0.02)

    def test_respects_ap_log_bound(self, w_sqrt, w_invsqrt, family):
        for w, p in ((w_sqrt, 2.0), (w_invsqrt, 1.0)):
            ap = W.ap_bound_estimate(w, p, family).value
            bmo = W.bmo_norm_estimate(w, family)
            assert bmo <= p * math.log(2.0) + 2.0 * math.log(ap) + 1e-3

    def test_exponential_weight_grows_with_cube(self):
        we = W.WeightSpec.from_function(
            lambda x: np.exp(np.asarray(x, dtype=float)), d=1, descriptor="exp-x")
        # closed form: avg over [c-h/2, c+h/2] of |x - c| = h/4
        for side in (1.0, 4.0, 16.0):
            got = W.bmo_norm_estimate(we, [W.Cube((0.0,), side)])
            assert got == pytest.approx(side / 4.0, rel=1e-9)


class TestDoubling:
    def test_trivial_weight_ratio_one(self, family):
        rep = W.doubling_check(W.WeightSpec.trivial(1), 2.0, 0.7, 2,
                               family[:40], ap_value=1.0, box_L=8.0)
        for (_, _, ratio, lo, hi) in rep.rows:
            assert lo - 1e-12 <= ratio <= hi + 1e-12
            assert ratio == pytest.approx(1.0, rel=1e-12)

    def test_r_zero_collapses(self, w_sqrt, family):
        rep = W.doubling_check(w_sqrt, 2.0, 0.0, 2, family[:40],
                               ap_value=1.5, box_L=8.0)
        for (_, _, ratio, lo, hi) in rep.rows:
            assert ratio == pytest.approx(1.0, rel=1e-12)
            assert lo == pytest.approx(1.0) and hi == pytest.approx(1.0)

    def test_sqrt_weight_margins(self, w_sqrt, family):
        ap = W.ap_bound_estimate(w_sqrt, 2.0, family).value
        dy = W.dyadic_cubes(1, 8.0, range(0, 5))
        rep = W.doubling_check(w_sqrt, 2.0, 1.0, 3, dy, ap_value=ap, box_L=8.0)
        assert rep.ok
        assert rep.skipped > 0  # scaled cubes near the edge leave the box

    def test_everything_skipped_raises(self, w_sqrt):
        big = [W.Cube((0.0,), 15.0)]
        with pytest.raises(DomainError):
            W.doubling_check(w_sqrt, 2.0, 1.0, 2, big, ap_value=1.5, box_L=8.0)


class TestReverseHolder:
    def test_admissible_delta_formula(self, w_sqrt, family):
        ap = W.ap_bound_estimate(w_sqrt, 2.0, family).value
        # p=2, d=1: r0 = 2^{-5}/2 = 1/64, delta_max = 1/(64 A_2)
        rep = W.reverse_holder_check(w_sqrt, 2.0, 1.0, 1.0 / (64.0 * ap),
                                     family, ap_value=ap)
        assert rep.delta_max == pytest.approx(1.0 / (64.0 * ap), rel=1e-12)
        assert rep.ok

    def test_out_of_range_delta(self, w_sqrt, family):
        with pytest.raises(DomainError, match="r0"):
            W.reverse_holder_check(w_sqrt, 2.0, 1.0, 0.25, family[:10],
                                   ap_value=1.5)

    def test_trivial_weight_large_margin(self, family):
        w = W.WeightSpec.trivial(1)
        rep = W.reverse_holder_check(w, 2.0, 1.0, 1.0 / 64.0, family[:80],
                                     ap_value=1.0)
        assert rep.ok
        # both averages equal 1; margins are 1 - 1/16 and 16 - 1
        assert rep.worst_margin_left == pytest.approx(1.0 - 1.0 / 16.0, rel=1e-9)
        assert rep.worst_margin_right == pytest.approx(15.0, rel=1e-9)

    @pytest.mark.parametrize("r", [0.25, 0.5, 1.0])
    def test_sqrt_weight_all_r(self, w_sqrt, family, r):
        ap = W.ap_bound_estimate(w_sqrt, 2.0, family).value
        rep = W.reverse_holder_check(w_sqrt, 2.0, r, 1.0 / (64.0 * ap), family,
                                     ap_value=ap)
        assert rep.worst_margin_left >= 0.0
        assert rep.worst_margin_right >= 0.0


class TestExpIntegrability:
    def test_jensen_lower_bound_and_measured_constant(self, w_sqrt, family):
        ap = W.ap_bound_estimate(w_sqrt, 2.0, family).value
        rep = W.exp_integrability_check(w_sqrt, 2.0, 0.05, family, ap_value=ap)
        assert rep.jensen_margin >= -1e-12
        assert rep.c_emp >= 1.0
        assert rep.r_admissible


class TestDescriptors:
    def test_parse(self, tmp_path):
        assert W.parse_weight("trivial", d=1).kind == "trivial"
        w = W.parse_weight("power:alpha=-0.5", d=1)
        assert w.alpha == -0.5
        path = tmp_path / "w.csv"
        path.write_text("-1.0,2.0\n0.0,1.0\n1.0,2.0\n")
        wt = W.parse_weight(f"tabulated:{path}", d=1)
        assert float(wt.eval(0.5)) == pytest.approx(1.5)

    def test_bad_descriptors(self, tmp_path):
        for bad in ["power", "power:beta=1", "nope", "tabulated:"]:
            with pytest.raises(DescriptorError):
                W.parse_weight(bad)
        path = tmp_path / "bad.csv"
        path.write_text("0.0,-1.0\n1.0,1.0\n")
        with pytest.raises(DescriptorError):
            W.parse_weight(f"tabulated:{path}")
