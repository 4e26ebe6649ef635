import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import kv

import opstab as op
from opstab.errors import DescriptorError, DomainError, KernelError

RG = np.concatenate([[1e-6], np.geomspace(1e-4, 64.0, 120)])


def inverse_fourier_oracle(gamma, x, rtol=1e-11):
    """(1/pi) int_0^inf (1+xi^2)^(-gamma/2) cos(x xi) dxi  (d=1)."""
    if x == 0.0:
        val, _ = integrate.quad(lambda s: (1 + s * s) ** (-gamma / 2), 0, np.inf,
                                epsabs=1e-13, epsrel=rtol)
        return val / math.pi
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(lambda s: (1 + s * s) ** (-gamma / 2), 0, np.inf,
                                weight="cos", wvar=x, epsabs=1e-13, limit=800)
    return val / math.pi


def kv_oracle(gamma, d, rho):
    nu = 0.5 * (d - gamma)
    return (rho ** (0.5 * (gamma - d)) * kv(nu, rho)
            / (2 ** (0.5 * (gamma + d - 2)) * math.pi ** (0.5 * d)
               * math.gamma(0.5 * gamma)))


class TestRadialDominator:
    def test_exp_profile_exact(self, exp_kernel):
        rp = op.radial_dominator(exp_kernel, RG)
        ts = np.array([0.1, 0.5, 1.0, 3.0])
        assert np.allclose(rp(ts), 0.5 * np.exp(-ts), rtol=1e-12)
        assert rp.l1_norm == pytest.approx(1.0, abs=1e-10)
        assert rp.tail_bound < 1e-12

    def test_zero_kernel(self):
        rp = op.radial_dominator(op.KernelSpec.zero(d=1, L=32.0), RG)
        assert np.all(rp(RG) == 0)
        assert rp.l1_norm == 0.0

    def test_bessel_matches_fourier_inversion(self, bessel_kernel_1d):
        rp = op.radial_dominator(bessel_kernel_1d, RG)
        for t in [0.25, 1.0, 2.5]:
            assert float(rp(t)) == pytest.approx(inverse_fourier_oracle(2.0, t),
                                                 rel=1e-7)

    def test_monotone_envelope(self, bessel_kernel_1d):
        rp = op.radial_dominator(bessel_kernel_1d, RG)
        vals = np.asarray(rp(RG), dtype=float)
        assert np.all(np.diff(vals) <= 1e-15)

    def test_dominator_correctness_random_pairs(self, rng, exp_kernel):
        rp = op.radial_dominator(exp_kernel, RG)
        y = rng.uniform(-30, 30, size=1000)
        yp = rng.uniform(-30, 30, size=1000)
        sep = np.abs(y - yp)
        ok = sep >= RG[0]
        assert np.all(np.abs(exp_kernel.eval(y[ok], yp[ok]))
                      <= np.asarray(rp(sep[ok])) + 1e-12)

    def test_nonmonotone_profile_gets_enveloped(self):
        # bump centered at t=2 on top of decay: envelope must flatten the rise
        def prof(t):
            t = np.asarray(t, float)
            return np.exp(-t) + 0.5 * np.exp(-8 * (t - 2.0) ** 2)

        k = op.KernelSpec.convolution(prof, d=1, L=16.0, monotone=False)
        rp = op.radial_dominator(k, RG)
        vals = np.asarray(rp(rp.radii), dtype=float)
        assert np.all(np.diff(vals) <= 1e-15)
        # at t=1 the envelope must see the bump peaking at t=2 (~0.635)
        assert float(rp(1.0)) >= 0.6

    def test_declared_monotone_but_is_not_refused(self):
        def prof(t):
            t = np.asarray(t, float)
            return np.exp(-t) + 0.5 * np.exp(-8 * (t - 2.0) ** 2)

        k = op.KernelSpec.convolution(prof, d=1, L=16.0, monotone=True)
        with pytest.raises(KernelError):
            op.radial_dominator(k, RG)

    def test_grid_validation(self, exp_kernel):
        with pytest.raises(ValueError):
            op.radial_dominator(exp_kernel, [1.0, 0.5])


class TestModulus:
    def test_exp_kernel_value(self, exp_kernel):
        # sup_{|u-1|<=0.2} |g(u) - g(1)| attained at u = 0.8
        expected = 0.5 * (math.exp(-0.8) - math.exp(-1.0))
        got = op.modulus_of_continuity(exp_kernel, 0.1, 1.0, 0.0)
        assert got == pytest.approx(expected, rel=1e-12)

    def test_brute_force_oracle(self, exp_kernel, rng):
        # independent brute-force sup over a fine perturbation grid
        delta, x, y = 0.07, 1.7, 0.4
        xs = x + np.linspace(-delta, delta, 401)
        ys = y + np.linspace(-delta, delta, 401)
        center = exp_kernel.eval(x, y)
        brute = np.max(np.abs(exp_kernel.eval(xs[:, None], ys[None, :]) - center))
        got = op.modulus_of_continuity(exp_kernel, delta, x, y)
        assert got == pytest.approx(brute, rel=1e-6)

    def test_zero_branch_below_cutoff(self, exp_kernel):
        assert op.modulus_of_continuity(exp_kernel, 0.1, 0.3, 0.0) == 0.0

    def test_constant_kernel(self):
        k = op.KernelSpec.constant(3.7, d=1, L=8.0)
        assert op.modulus_of_continuity(k, 0.1, 2.0, 0.0) == 0.0

    def test_outside_box_is_domain_error(self, exp_kernel):
        with pytest.raises(DomainError):
            op.modulus_of_continuity(exp_kernel, 0.1, 100.0, 0.0)


class TestConditionConstants:
    DG = np.geomspace(1e-3, 1.0, 13)

    def test_exp_singularity_term(self, exp_kernel):
        rep = op.kernel_condition_constants(exp_kernel, 1.0, self.DG)
        d0 = self.DG[0]
        # sup_d (1 - e^{-d})/d over the grid, attained at the smallest delta
        assert rep.sup_singularity_term == pytest.approx((1 - math.exp(-d0)) / d0,
                                                         rel=1e-6)
        assert rep.sup_singularity_term <= 1.0
        assert not rep.diverging
        assert rep.D0 >= rep.norm_rk

    def test_zero_kernel(self):
        rep = op.kernel_condition_constants(op.KernelSpec.zero(d=1, L=8.0), 1.0,
                                            self.DG)
        assert rep.D0 == 0.0

    def test_bessel_regression_fixture(self, bessel_kernel_1d):
        rep = op.kernel_condition_constants(bessel_kernel_1d, 1.0, self.DG)
        assert math.isfinite(rep.D0)
        # frozen regression value (same grids, same quadrature contract)
        assert rep.D0 == pytest.approx(4.0946732, rel=1e-5)

    def test_jump_kernel_diverges(self):
        def chi(t):
            return np.where(np.asarray(t, float) < 0.5, 1.0, 0.0)

        k = op.KernelSpec.convolution(chi, d=1, L=8.0, monotone=True)
        rep = op.kernel_condition_constants(k, 1.0, self.DG)
        assert rep.diverging


class TestBessel:
    def test_closed_form_gamma2_d1(self):
        for x in [0.1, 0.5, 1.0, 2.0, 5.0]:
            assert op.bessel_kernel(2.0, 1, x) == pytest.approx(
                0.5 * math.exp(-abs(x)), rel=1e-10)

    def test_continuity_at_origin(self):
        assert op.bessel_kernel(2.0, 1, 0.0) == pytest.approx(0.5, rel=1e-10)
        assert op.bessel_kernel(2.0, 1, 1e-6) == pytest.approx(0.5, rel=1e-5)

    def test_singular_at_origin_when_gamma_le_d(self):
        with pytest.raises(DomainError):
            op.bessel_kernel(1.0, 1, 0.0)

    def test_positivity(self):
        for gamma in (1.0, 2.0, 3.0):
            for d in (1, 2):
                for rho in (0.05, 0.7, 3.0, 9.0):
                    x = [rho] + [0.0] * (d - 1)
                    assert op.bessel_kernel(gamma, d, x) > 0.0

    def test_inverse_fourier_oracle_d1(self):
        for gamma in (1.0, 3.0):
            for x in (0.3, 1.2):
                assert op.bessel_kernel(gamma, 1, x) == pytest.approx(
                    inverse_fourier_oracle(gamma, x), rel=1e-7)

    def test_kv_closed_form_many(self):
        for gamma, d, rho in [(1.0, 1, 0.4), (2.5, 1, 2.2), (2.0, 2, 1.0),
                              (3.0, 2, 0.1), (0.7, 2, 5.0)]:
            x = [rho] + [0.0] * (d - 1)
            assert op.bessel_kernel(gamma, d, x) == pytest.approx(
                kv_oracle(gamma, d, rho), rel=1e-9)

    def test_normalization_d1(self, bessel_kernel_1d):
        rp = op.radial_dominator(bessel_kernel_1d, RG)
        total = rp.l1_norm
        assert 1.0 - rp.tail_bound - 1e-7 <= total <= 1.0 + 1e-7

    def test_interpolant_vs_direct_quadrature(self, bessel_kernel_1d, rng):
        prof = bessel_kernel_1d.profile
        for t in rng.uniform(1e-4, 60.0, size=12):
            assert float(prof(t)) == pytest.approx(
                op.bessel_kernel(2.0, 1, t), rel=1e-7)


class TestFourierSymbol:
    def test_total_integral_at_zero(self, exp_kernel):
        assert op.fourier_symbol(exp_kernel, [0.0])[0] == pytest.approx(1.0,
                                                                        abs=1e-10)

    def test_exp_symbol_at_one(self, exp_kernel):
        # oracle: (1+xi^2)^{-1} at xi=1, cross-checked against the potential symbol
        assert op.fourier_symbol(exp_kernel, [1.0])[0] == pytest.approx(0.5,
                                                                        abs=1e-9)

    def test_zero_profile(self):
        vals = op.fourier_symbol(op.KernelSpec.zero(d=1, L=8.0),
                                 np.linspace(-3, 3, 7))
        assert np.allclose(vals, 0.0, atol=1e-14)

    def test_symbol_consistency_bessel(self, bessel_kernel_1d):
        xi = np.linspace(-8, 8, 33)
        vals = op.fourier_symbol(bessel_kernel_1d, xi)
        assert np.allclose(vals, 1.0 / (1.0 + xi ** 2), atol=1e-6)


class TestWienerAmalgam:
    DG = np.geomspace(1e-3, 1.0, 10)

    def test_unit_cell_indicator(self):
        def chi(t):
            return np.where(np.asarray(t, float) < 0.5, 1.0, 0.0)

        k = op.KernelSpec.convolution(chi, d=1, L=8.0, monotone=True)
        rep = op.wiener_amalgam_condition(k, 1.0, self.DG)
        assert rep.first_term == pytest.approx(1.0, abs=1e-12)
        assert not rep.applicable  # jump on the diagonal

    def test_exp_kernel_first_term(self, exp_kernel):
        # closed form: 1/2 + sum_{m>=1} 2 * (1/2) e^{-(m-1/2)} = 1/2 + e^{1/2}/(e-1)
        rep = op.wiener_amalgam_condition(exp_kernel, 1.0, self.DG)
        assert rep.first_term == pytest.approx(0.5 + math.exp(0.5) / (math.e - 1),
                                               rel=1e-9)
        assert rep.applicable
        assert math.isfinite(rep.value)

    def test_singular_kernel_inapplicable(self):
        k = op.KernelSpec.bessel(1.0, d=1, L=8.0)
        rep = op.wiener_amalgam_condition(k, 1.0, self.DG)
        assert not rep.applicable
        assert rep.value == math.inf


class TestDescriptors:
    def test_parse_all_kinds(self, tmp_path):
        k = op.parse_kernel("bessel:gamma=2", d=1, L=16.0)
        assert k.params["gamma"] == 2.0 and k.L == 16.0
        k = op.parse_kernel("conv-exp:scale=2.5", d=1)
        assert k.params["scale"] == 2.5
        path = tmp_path / "profile.csv"
        path.write_text("0.0,1.0\n1.0,0.5\n2.0,0.0\n")
        k = op.parse_kernel(f"tabulated:{path}", d=1, L=8.0)
        assert float(k.profile(1.0)) == pytest.approx(0.5)

    def test_bad_descriptors(self):
        for bad in ["bessel", "bessel:gamma=-1", "conv-exp:scale=0",
                    "nope:x=1", "tabulated:"]:
            with pytest.raises(DescriptorError):
                op.parse_kernel(bad)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.floats(0.1, 3.0), st.floats(0.2, 5.0)),
                min_size=1, max_size=4),
       st.floats(0.05, 2.0))
def test_envelope_dominates_and_is_monotone(components, t_probe):
    """Mixtures of gaussian bumps: envelope monotone and dominating."""
    comps = list(components)

    def prof(t):
        t = np.asarray(t, float)
        out = np.zeros_like(t)
        for amp, center in comps:
            out = out + amp * np.exp(-4.0 * (t - center) ** 2)
        return out

    k = op.KernelSpec.convolution(prof, d=1, L=8.0, monotone=False)
    rp = op.radial_dominator(k, np.geomspace(1e-3, 16.0, 60))
    vals = np.asarray(rp(rp.radii), dtype=float)
    assert np.all(np.diff(vals) <= 1e-12)
    # grid sup is a lower bound; allow resolution slack of the master grid
    assert float(rp(t_probe)) >= float(prof(t_probe)) - 0.02
