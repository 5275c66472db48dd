import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rgscalelab.errors import DimensionError, DivergenceError, FitError
from rgscalelab.kernels import AveragingKernel, wedge_kernel
from rgscalelab.scaling_engine import (
    BlockObservableSpec,
    CriticalTruncated,
    GaussianProfile,
    GaussianTruncated,
    IndicatorProfile,
    ScaleSweep,
    autocorrelation_sweep,
    block_l_point_normal,
    block_two_point_spectral,
    commutator_bound,
    critical_block_two_point_position,
    critical_limit_two_point,
    derivative_exponent_shift,
    field_vs_block_consistency,
    fit_exponent,
    fixed_point_scaling_residual,
    gaussian_remainder,
    geometric_grid,
    normal_two_point_limit,
    real_space_two_point,
    scale_sweep,
    sharp_real_space_two_point,
)
from rgscalelab.spectral_models import DispersionLaw, QuasifreeModel, constant_weight

from . import oracle_values as ov

SMOOTH1 = AveragingKernel("smooth", 1)
SHARP1 = AveragingKernel("sharp", 1)
GRID = geometric_grid(10.0, 1e4, 12)


def critical(n, alpha, j=1.0):
    return QuasifreeModel(n, 1.0, 0.0, DispersionLaw(alpha), constant_weight(j))


class TestSweepAndFit:
    def test_constant(self):
        s = scale_sweep(lambda R: 2.5, GRID)
        assert np.all(s.values == 2.5)

    def test_power(self):
        s = scale_sweep(lambda R: R**-2, [1.0, 10.0, 100.0])
        assert np.allclose(s.values, [1.0, 1e-2, 1e-4], rtol=1e-15)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            scale_sweep(lambda R: 1.0, [1.0, 1.0, 2.0])
        with pytest.raises(ValueError):
            scale_sweep(lambda R: 1.0, [-1.0, 2.0])
        with pytest.raises(ValueError):
            geometric_grid(10.0, 1.0, 5)

    def test_failures_are_recorded(self):
        def comp(R):
            if R > 500:
                raise DivergenceError("boom")
            return R

        s = scale_sweep(comp, GRID, workers=3)
        bad = [i for i, R in enumerate(GRID) if R > 500]
        assert sorted(s.failures) == bad
        assert all("DivergenceError" in s.failures[i] for i in bad)
        assert np.all(np.isnan(s.values[bad]))

    def test_worker_count_does_not_change_values(self):
        model = critical(1, 0.5)
        spec = BlockObservableSpec(0.75, SMOOTH1)
        a = autocorrelation_sweep(model, spec, GRID, workers=1).values
        b = autocorrelation_sweep(model, spec, GRID, workers=5).values
        assert a.tobytes() == b.tobytes()

    def test_exact_power_law(self):
        s = ScaleSweep(GRID, 3.0 * GRID**-1.5)
        fit = fit_exponent(s, (0, 12))
        assert fit.slope == pytest.approx(-1.5, abs=1e-12)
        assert fit.max_residual <= 1e-12
        assert math.exp(fit.intercept) == pytest.approx(3.0)

    def test_corrected_power_law(self):
        r = geometric_grid(1e2, 1e4, 10)
        fit = fit_exponent(ScaleSweep(r, r**-1 * (1 + 1 / r)), (0, 10))
        assert fit.slope == pytest.approx(-1.0, abs=0.01)

    def test_non_finite_point_is_excluded(self):
        v = GRID**-1.0
        v[9] = np.nan
        fit = fit_exponent(ScaleSweep(GRID, v))
        assert fit.excluded == (9,)
        assert fit.points == 5
        assert fit.slope == pytest.approx(-1.0, abs=1e-12)

    def test_default_window_is_upper_half(self):
        assert fit_exponent(ScaleSweep(GRID, GRID)).window == (6, 12)
        assert fit_exponent(ScaleSweep(GRID[:6], GRID[:6])).window == (2, 6)

    def test_degenerate(self):
        with pytest.raises(FitError):
            fit_exponent(ScaleSweep(GRID, np.zeros(12)))

    @given(st.floats(-3.0, 3.0), st.floats(0.1, 10.0))
    def test_recovers_any_exponent(self, p, c):
        fit = fit_exponent(ScaleSweep(GRID, c * GRID**p))
        assert fit.slope == pytest.approx(p, abs=1e-9)


class TestSpectralTwoPoint:
    @pytest.mark.parametrize("alpha", [1.0, 2.0])
    def test_normal_regime_limit(self, alpha):
        # J_+ + J_- -> coth(beta |mu| / 2) at k = 0; the kernel part is the L2 norm.
        # The correction is O(R^-alpha) from the dispersion.
        model = QuasifreeModel(1, 1.0, -1.0, DispersionLaw(alpha))
        spec = BlockObservableSpec(0.5, SMOOTH1)
        limit = ov.SMOOTH_L2_N1 / math.tanh(0.5)
        grid = [1e2, 3e2, 1e3, 1e4]
        errs = [abs(block_two_point_spectral(model, spec, R, [0.0]) - limit) / limit for R in grid]
        assert errs[-1] < 1e-4
        assert fit_exponent(ScaleSweep(grid, errs), (0, 4)).slope == pytest.approx(-alpha, abs=0.02)
        sharp = block_two_point_spectral(model, BlockObservableSpec(0.5, SHARP1), 1e4, [0.0])
        assert sharp.real == pytest.approx(2.0 / math.tanh(0.5), rel=1e-3)

    def test_separated_blocks(self):
        model = QuasifreeModel(1, 1.0, -1.0, DispersionLaw(2.0))
        v = block_two_point_spectral(model, BlockObservableSpec(0.5, SHARP1), 1e4, [0.5])
        assert v.real == pytest.approx(1.5 / math.tanh(0.5), rel=1e-3)

    @pytest.mark.parametrize("n, alpha", [(1, 0.5), (2, 1.0), (3, 2.0)])
    def test_growth_below_critical_exponent(self, n, alpha):
        sweep = autocorrelation_sweep(critical(n, alpha), BlockObservableSpec(n / 2.0, AveragingKernel("smooth", n)), GRID)
        assert fit_exponent(sweep).slope == pytest.approx(alpha, abs=0.02)

    def test_finite_limit_at_critical_exponent(self):
        sweep = autocorrelation_sweep(critical(1, 0.5), BlockObservableSpec(0.75, SMOOTH1), GRID)
        inc = np.abs(np.diff(sweep.values))
        assert np.all(np.diff(inc) < 0)
        assert abs(sweep.values[-1]) > 1.0

    def test_zero_weight(self):
        model = critical(2, 1.0, j=0.0)
        assert block_two_point_spectral(model, BlockObservableSpec(1.5, AveragingKernel("smooth", 2)), 50.0, [0.3, 0.1], 0.7) == 0

    def test_divergent_model(self):
        with pytest.raises(DivergenceError):
            block_two_point_spectral(critical(1, 1.0), BlockObservableSpec(1.0, SMOOTH1), 10.0, [0.0])


@given(st.sampled_from([(1, 0.5), (2, 1.0), (3, 2.0)]), st.floats(-0.3, 0.3))
def test_exponent_dial(model_params, offset):
    n, a = model_params
    gamma = (n + a) / 2.0 + offset
    sweep = autocorrelation_sweep(critical(n, a), BlockObservableSpec(gamma, AveragingKernel("smooth", n)), GRID)
    assert fit_exponent(sweep).slope == pytest.approx(-2.0 * offset, abs=0.02 * max(1.0, abs(2 * offset)))


class TestNormalRegime:
    def test_three_point_decay(self):
        w = GaussianTruncated(3, 1)
        X = np.array([[0.5], [0.0], [-0.5]])
        fit = fit_exponent(scale_sweep(lambda R: block_l_point_normal(w, SMOOTH1, R, X), GRID))
        assert fit.slope == pytest.approx(-0.5, abs=0.02)

    def test_four_point_decay(self):
        w = GaussianTruncated(4, 1)
        X = np.array([[0.6], [0.2], [-0.2], [-0.6]])
        grid = geometric_grid(10.0, 1e4, 8)
        fit = fit_exponent(scale_sweep(lambda R: block_l_point_normal(w, SMOOTH1, R, X), grid))
        assert fit.slope == pytest.approx(-1.0, rel=0.05)

    def test_two_point_limit(self):
        w = GaussianTruncated(2, 1, covariance=np.array([[2.0]]))
        Y = 0.7
        closed = w.integral() * float(SMOOTH1.self_convolution(Y))
        assert normal_two_point_limit(w, SMOOTH1, [Y]) == pytest.approx(closed, rel=1e-10)
        val = block_l_point_normal(w, SMOOTH1, 1e4, np.array([[Y], [0.0]]))
        assert abs(val - closed) / closed <= 1e-6

    def test_narrow_truncated_function(self):
        w = GaussianTruncated(2, 1, covariance=np.array([[1e-6]]))
        val = block_l_point_normal(w, SMOOTH1, 10.0, np.zeros((2, 1)))
        assert val.real == pytest.approx(w.integral() * ov.SMOOTH_L2_N1, rel=1e-6)

    def test_frequency_and_position_routes(self):
        w = GaussianTruncated(3, 1)
        X = np.array([[0.5], [0.0], [-0.5]])
        for R in (3.0, 10.0):
            a = block_l_point_normal(w, SMOOTH1, R, X, route="fourier")
            b = block_l_point_normal(w, SMOOTH1, R, X, route="position")
            assert abs(a - b) <= 1e-7 * abs(b)

    def test_rejects(self):
        with pytest.raises(ValueError):
            block_l_point_normal(GaussianTruncated(5, 1), SMOOTH1, 10.0, np.zeros((5, 1)))
        with pytest.raises(DimensionError):
            block_l_point_normal(GaussianTruncated(2, 2), SMOOTH1, 10.0, np.zeros((2, 2)))
        with pytest.raises(ValueError):
            block_l_point_normal(GaussianTruncated(3, 2), AveragingKernel("smooth", 2), 10.0, np.zeros((3, 2)))

    def test_sharp_real_space(self):
        w = GaussianTruncated(2, 1, amplitude=1.0 / math.sqrt(2.0 * math.pi))
        assert sharp_real_space_two_point(w, 1e4, [0.0]) == pytest.approx(2.0, rel=1e-3)
        assert sharp_real_space_two_point(w, 1e4, [2.5]) == 0.0

    def test_kernel_overlap_normalisation(self):
        w = GaussianTruncated(2, 1)
        ratios = []
        for Y in (0.0, 0.5, 1.0):
            sm = real_space_two_point(w, SMOOTH1, 1e4, [Y]) / float(SMOOTH1.self_convolution(Y))
            sh = sharp_real_space_two_point(w, 1e4, [Y]) / float(SHARP1.self_convolution(Y))
            ratios.append(sm / sh)
        assert np.ptp(ratios) < 1e-3

    def test_non_integrable_truncated_function(self):
        with pytest.raises(DivergenceError):
            real_space_two_point(lambda z: 1.0 / np.sqrt(1.0 + z[0] ** 2), SMOOTH1, 10.0, [0.0])


class TestCriticalRegime:
    def test_sharp_oracles(self):
        assert critical_limit_two_point(SHARP1, 1, 0.5, [0.0]) == pytest.approx(ov.CRITICAL_SHARP_N1_Y0, rel=1e-10)
        assert critical_limit_two_point(SHARP1, 1, 0.5, [3.0]) == pytest.approx(ov.CRITICAL_SHARP_N1_Y3, rel=1e-10)

    @pytest.mark.parametrize("kernel", [SMOOTH1, SHARP1, AveragingKernel("smooth", 2), AveragingKernel("sharp", 3)])
    def test_two_routes_agree(self, kernel):
        n = kernel.dimension
        a = 0.5 * n
        Y = np.zeros(n)
        Y[0] = 1.3
        p = critical_limit_two_point(kernel, n, a, Y)
        f = critical_limit_two_point(kernel, n, a, Y, method="fourier")
        assert p == pytest.approx(f, rel=1e-6)

    @pytest.mark.parametrize("kernel", [SMOOTH1, SHARP1])
    def test_large_separation(self, kernel):
        v = critical_limit_two_point(kernel, 1, 0.5, [100.0]) * 100.0**0.5
        assert v == pytest.approx(kernel.fourier_at_zero**2, rel=0.02)

    def test_alpha_near_n(self):
        v = critical_limit_two_point(SMOOTH1, 1, 0.99, [0.0])
        assert v == pytest.approx(SMOOTH1.fourier_at_zero**2, rel=0.05)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, 1.5])
    def test_alpha_range(self, alpha):
        with pytest.raises(ValueError):
            critical_limit_two_point(SMOOTH1, 1, alpha, [1.0])

    def test_position_pipeline_converges(self):
        w = CriticalTruncated(1, 0.5, 1.0, gaussian_remainder())
        limit = critical_limit_two_point(SHARP1, 1, 0.5, [3.0])
        vals = [critical_block_two_point_position(w, SHARP1, 0.75, R, [3.0]) for R in (10.0, 100.0, 1e3)]
        errs = np.abs(np.array(vals) - limit)
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] / limit < 0.01

    def test_offset_exponent(self):
        w = CriticalTruncated(1, 0.5, 1.0)
        sweep = scale_sweep(lambda R: critical_block_two_point_position(w, SHARP1, 0.85, R, [3.0]), geometric_grid(10, 1e3, 8))
        assert fit_exponent(sweep).slope == pytest.approx(-0.2, abs=0.01)

    def test_remainder_suppressed(self):
        w = CriticalTruncated(1, 0.5, 1.0, gaussian_remainder())
        const, rem = critical_block_two_point_position(w, SHARP1, 0.75, 100.0, [3.0], split=True)
        assert abs(rem) < 1e-4 * abs(const)

    def test_remainder_straddling_singularity_decays_like_r_to_minus_alpha(self):
        # y = -Y inside the support of f*f: the remainder share falls only like R^-alpha
        w = CriticalTruncated(1, 0.5, 1.0, gaussian_remainder())
        grid = geometric_grid(100.0, 1e4, 6)
        share = [np.divide(*critical_block_two_point_position(w, SMOOTH1, 0.75, R, [3.0], split=True)[::-1]) for R in grid]
        assert fit_exponent(ScaleSweep(grid, share), (0, 6)).slope == pytest.approx(-0.5, abs=0.05)

    def test_homogeneity_exact_for_power_law(self):
        table = {y: y**-0.5 for y in (1.0, 2.0, 4.0, 8.0)}
        assert fixed_point_scaling_residual(table, 2.0, 1, 0.75) <= 1e-12

    def test_homogeneity_only_asymptotic(self):
        table = {y: critical_limit_two_point(SMOOTH1, 1, 0.5, [y]) for y in (1.0, 2.0, 4.0, 50.0, 100.0, 200.0)}
        far = fixed_point_scaling_residual(table, 2.0, 1, 0.75, y_min=50.0)
        near = fixed_point_scaling_residual({y: v for y, v in table.items() if y <= 4}, 2.0, 1, 0.75)
        assert far <= 0.02
        assert near > 10 * far

    def test_homogeneity_needs_pairs(self):
        with pytest.raises(ValueError):
            fixed_point_scaling_residual({1.0: 1.0, 3.0: 0.5}, 2.0, 1, 0.75)

    @pytest.mark.parametrize("kernel", [SMOOTH1, SHARP1, wedge_kernel()], ids=["smooth", "sharp", "wedge"])
    def test_field_vs_block(self, kernel):
        assert field_vs_block_consistency(kernel, 1, 0.5, [10.0]) <= 1e-6

    def test_field_vs_block_scales_together(self):
        a = critical_limit_two_point(SHARP1, 1, 0.5, [10.0])
        b = critical_limit_two_point(SHARP1, 1, 0.5, [20.0])
        assert field_vs_block_consistency(SHARP1, 1, 0.5, [20.0]) <= 1e-6
        assert b / a == pytest.approx(2.0**-0.5, rel=0.01)


class TestCommutator:
    def test_balanced_exponents_constant(self):
        prof = GaussianProfile()
        expected = math.sqrt(2.0 * math.pi) * ov.SMOOTH_L2_N1
        grid = [1e2, 3e2, 1e3, 1e4]
        errs = [abs(commutator_bound(SMOOTH1, 0.5, 0.5, R, prof) / expected - 1.0) for R in grid]
        assert errs[-1] <= 1e-8
        assert fit_exponent(ScaleSweep(grid, errs), (0, 4)).slope == pytest.approx(-2.0, abs=0.02)

    def test_sharp_closed_form(self):
        # integral e^{-y^2/2} (2 - |y|/R) dy
        val = commutator_bound(SHARP1, 0.5, 0.5, 10.0, GaussianProfile())
        assert val == pytest.approx(2.0 * math.sqrt(2.0 * math.pi) - 0.2, rel=1e-12)

    def test_decay_rate(self):
        prof = GaussianProfile()
        sweep = scale_sweep(lambda R: commutator_bound(SMOOTH1, 1.0, 1.0, R, prof), geometric_grid(10, 1e3, 10))
        assert fit_exponent(sweep).slope == pytest.approx(-1.0, abs=0.02)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_indicator_real_vs_fourier(self, n):
        kernel = AveragingKernel("sharp", n)
        prof = IndicatorProfile(1.0, 1.5, n)
        a = commutator_bound(kernel, n / 2, n / 2 + 0.5, 20.0, prof)
        b = commutator_bound(kernel, n / 2, n / 2 + 0.5, 20.0, prof, method="fourier")
        assert a == pytest.approx(b, rel=1e-5)

    def test_non_integrable_profile(self):
        class Slow:
            support = math.inf

            def __call__(self, r):
                return 1.0 / (1.0 + np.asarray(r))

        with pytest.raises(DivergenceError):
            commutator_bound(SMOOTH1, 0.5, 0.5, 10.0, Slow())


class TestDerivativeShift:
    @pytest.mark.parametrize("n, alpha", [(1, 0.5), (2, 1.0), (1, 0.05)])
    def test_gap(self, n, alpha):
        spec = BlockObservableSpec((n + alpha) / 2, AveragingKernel("smooth", n))
        fa, fd = derivative_exponent_shift(critical(n, alpha), spec, GRID)
        assert fa.slope - fd.slope == pytest.approx(2 * alpha, abs=0.03 if alpha > 0.1 else 0.005)

    def test_zero_weight_cannot_be_fitted(self):
        spec = BlockObservableSpec(0.75, SMOOTH1)
        with pytest.raises(FitError):
            derivative_exponent_shift(critical(1, 0.5, j=0.0), spec, GRID)

    def test_requires_critical_power_law(self):
        with pytest.raises(ValueError):
            derivative_exponent_shift(QuasifreeModel(1, 1.0, -1.0), BlockObservableSpec(0.5, SMOOTH1), GRID)


def test_spec_validation():
    with pytest.raises(ValueError):
        BlockObservableSpec(math.nan)
    s = BlockObservableSpec(1.0, SMOOTH1).derivative().with_gamma(0.5)
    assert s.time_derivatives == 1 and s.gamma == 0.5
