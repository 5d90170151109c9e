import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperavg.averaging import (AverageDirection, brute_force_average, coupling_matrix,
                                coupling_quadrature, coupling_term_derivative, discrete_coupling,
                                mj_average_product, spectral_average)
from hyperavg.core import Field, GridError, Spectrum, make_grid, sample
from hyperavg.resonance import SystemSpec, check_shallow_water_resonance

PLUS, MINUS = AverageDirection.PLUS, AverageDirection.MINUS
BOTTOM = Spectrum.from_terms([("sin", 2, 5.0)])
COS1 = Spectrum.from_terms([("cos", 1, 1.0)])


@st.composite
def real_spectra(draw, max_modes=8, max_freq=6, zero_mean=True):
    n = draw(st.integers(1, max_modes))
    freqs = draw(st.lists(st.integers(1, max_freq), min_size=n, max_size=n))
    amps = draw(st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=n, max_size=n))
    modes = []
    for f, (re, im) in zip(freqs, amps):
        modes += [(f, complex(re, im)), (-f, complex(re, -im))]
    if not zero_mean:
        modes.append((0, draw(st.floats(-2, 2))))
    return Spectrum(tuple(modes))


class TestSpectralAverage:
    def test_resonant_pair(self):
        out = spectral_average(BOTTOM, COS1, PLUS)
        x = np.linspace(0, 2 * np.pi, 33)
        assert np.allclose(out.evaluate(x), 2.5 * np.sin(x), atol=1e-14)

    @pytest.mark.parametrize("y", [0.0, 0.4, 2.1])
    def test_matches_brute_force_time_average(self, y):
        T = 2 * np.pi * 1e4
        plus = brute_force_average(lambda s: 5 * np.sin(2 * (y + s)) * np.cos(y + 2 * s), T, 20)
        minus = brute_force_average(lambda s: 5 * np.sin(2 * (y - s)) * np.cos(y - 2 * s), T, 20)
        assert plus == pytest.approx(2.5 * math.sin(y), abs=1e-3)
        assert minus == pytest.approx(2.5 * math.sin(y), abs=1e-3)
        assert spectral_average(BOTTOM, COS1, PLUS).evaluate(y) == pytest.approx(plus, abs=1e-3)

    def test_constant_wave_averages_out(self):
        const = Spectrum.from_terms([("const", 0, 3.0)])
        assert len(spectral_average(BOTTOM, const)) == 0

    def test_non_resonant_pair_vanishes(self):
        h = Spectrum.from_terms([("sin", 3, 1.0)])
        assert len(spectral_average(h, COS1, PLUS)) == 0
        assert len(spectral_average(h, COS1, MINUS)) == 0

    @given(real_spectra(), real_spectra())
    def test_output_at_minus_nu(self, h, v):
        out = spectral_average(h, v)
        surviving = {-nu for mu, _ in h.modes for nu, _ in v.modes if mu + 2 * nu == 0}
        assert set(out.frequencies.tolist()) <= surviving

    @given(real_spectra(), real_spectra(), real_spectra(), st.floats(-3, 3))
    def test_linear_in_wave(self, h, v, w, c):
        lhs = spectral_average(h, v + w.scale(c))
        rhs = spectral_average(h, v) + spectral_average(h, w).scale(c)
        x = np.linspace(0, 2 * np.pi, 17)
        assert np.allclose(lhs.evaluate(x), rhs.evaluate(x), atol=1e-9)


class TestMjAverage:
    @settings(max_examples=30)
    @given(real_spectra(), real_spectra(), st.floats(0.1, 3.0))
    def test_self_interaction_kept(self, a, b, gap):
        spec = SystemSpec(lambdas=(0.0, gap))
        out = mj_average_product(spec, 0, 0, 0, (a, b))
        expected = a * a.derivative()
        x = np.linspace(0, 2 * np.pi, 23)
        assert np.allclose(out.evaluate(x), expected.evaluate(x), atol=1e-12)

    @given(real_spectra(), real_spectra())
    def test_cross_gradient_vanishes(self, a, b):
        spec = SystemSpec(lambdas=(1.0, -1.0))
        assert len(mj_average_product(spec, 0, 0, 1, (a, b))) == 0

    @given(real_spectra(), real_spectra())
    def test_cross_amplitude_vanishes(self, a, b):
        spec = SystemSpec(lambdas=(1.0, -1.0))
        assert len(mj_average_product(spec, 0, 1, 0, (a, b))) == 0

    def test_cross_amplitude_keeps_mean(self):
        spec = SystemSpec(lambdas=(1.0, -1.0))
        w1 = Spectrum.from_terms([("const", 0, 0.5), ("cos", 3, 1.0)])
        out = mj_average_product(spec, 0, 1, 0, (COS1, w1))
        x = np.linspace(0, 2 * np.pi, 19)
        assert np.allclose(out.evaluate(x), -0.5 * np.sin(x), atol=1e-14)


class TestDiscreteCoupling:
    def test_flat_zero_bottom(self):
        g = make_grid(32)
        h = Field(g, np.zeros(32))
        v = sample(g, np.cos)
        for j in (0, 5, 31):
            assert discrete_coupling(h, v, v, j, PLUS) == 0.0

    @pytest.mark.parametrize("direction", [PLUS, MINUS])
    def test_resonant_average(self, direction):
        g = make_grid(32)
        h = sample(g, lambda x: 5 * np.sin(2 * x))
        v = sample(g, np.cos)
        vals = np.array([discrete_coupling(h, v, v, j, direction) for j in range(32)])
        assert np.max(np.abs(vals - 2.5 * np.sin(g.nodes))) <= g.spacing ** 2

    def test_unit_bottom_zero_mean_wave(self):
        g = make_grid(64)
        h = Field(g, np.ones(64))
        v = sample(g, lambda x: np.cos(3 * x) - 0.2 * np.sin(x))
        assert max(abs(discrete_coupling(h, v, v, j, PLUS)) for j in range(64)) <= 1e-12

    def test_time_levels_averaged(self):
        g = make_grid(16)
        h = sample(g, lambda x: np.sin(2 * x))
        a, b = sample(g, np.cos), sample(g, np.sin)
        avg = Field(g, 0.5 * (a.values + b.values))
        assert discrete_coupling(h, a, b, 3, MINUS) == pytest.approx(
            discrete_coupling(h, avg, avg, 3, MINUS), abs=1e-15)

    def test_vectorized_matches_pointwise(self):
        g = make_grid(16)
        h = sample(g, lambda x: np.sin(2 * x) + 0.3 * np.cos(x))
        v = sample(g, lambda x: np.cos(x) + np.sin(3 * x))
        for d in (PLUS, MINUS):
            vec = coupling_quadrature(h, v, v, d)
            pts = [discrete_coupling(h, v, v, j, d) for j in range(16)]
            assert np.allclose(vec, pts, atol=1e-14)

    def test_grid_mismatch(self):
        with pytest.raises(GridError):
            discrete_coupling(sample(make_grid(8), np.sin), sample(make_grid(16), np.sin),
                              sample(make_grid(16), np.sin), 0, PLUS)

    def test_requires_two_pi_period(self):
        g = make_grid(16, 1.0)
        with pytest.raises(GridError):
            coupling_matrix(sample(g, np.sin), PLUS)

    @given(real_spectra(max_modes=3, max_freq=4, zero_mean=False),
           real_spectra(max_modes=3, max_freq=4, zero_mean=False))
    def test_agrees_with_spectral_average(self, h_spec, v_spec):
        # trigonometric data below the grid's alias limit: the quadrature is exact
        g = make_grid(32)
        h, v = Field(g, h_spec.evaluate(g.nodes)), Field(g, v_spec.evaluate(g.nodes))
        exact = spectral_average(h_spec, v_spec).evaluate(g.nodes)
        for d in (PLUS, MINUS):
            assert np.allclose(coupling_quadrature(h, v, v, d), exact, atol=1e-11)

    def test_second_order_on_smooth_data(self):
        # non-trigonometric wave: quadrature error must fall at least like h^2
        errs = []
        for m in (16, 32, 64):
            g = make_grid(m)
            h = sample(g, lambda x: 5 * np.sin(2 * x))
            v = sample(g, lambda x: 1 / (1.5 + np.cos(x)))
            errs.append(np.max(np.abs(coupling_quadrature(h, v, v, PLUS)
                                      - _fine_average(g.nodes))))
        assert errs[1] <= errs[0] / 3.5 + 1e-13 and errs[2] <= errs[1] / 3.5 + 1e-13


def _fine_average(y):
    s = np.linspace(0, 2 * np.pi, 4097)[:-1]
    return np.array([np.mean(5 * np.sin(2 * (yy - s)) / (1.5 + np.cos(yy - 2 * s))) for yy in y])


class TestCouplingDerivative:
    def test_flat_zero_bottom(self):
        g = make_grid(32)
        out = coupling_term_derivative(Field(g, np.zeros(32)), sample(g, np.cos),
                                       sample(g, np.cos), PLUS)
        assert np.all(out.values == 0.0)

    @pytest.mark.parametrize("m", [32, 64, 128])
    def test_resonant_pair(self, m):
        g = make_grid(m)
        h = sample(g, lambda x: 5 * np.sin(2 * x))
        v = sample(g, np.cos)
        out = coupling_term_derivative(h, v, v, PLUS)
        assert np.max(np.abs(out.values - 1.25 * np.cos(g.nodes))) <= 1.25 * g.spacing ** 2 / 6 * 1.01

    def test_constant_wave(self):
        g = make_grid(32)
        h = sample(g, lambda x: 5 * np.sin(2 * x))
        c = Field(g, np.full(32, 0.8))
        assert np.max(np.abs(coupling_term_derivative(h, c, c, MINUS).values)) <= 1e-12

    @given(st.lists(st.floats(-1, 1), min_size=4, max_size=4))
    def test_non_resonance_decouples(self, coeffs):
        g = make_grid(64)
        h_spec = Spectrum.from_terms([("sin", 3, 1.0)])
        z_spec = Spectrum.from_terms([("cos", 1, coeffs[0]), ("sin", 1, coeffs[1]),
                                      ("cos", 2, coeffs[2]), ("sin", 2, coeffs[3])])
        assert not check_shallow_water_resonance(h_spec, z_spec).resonant
        h = Field(g, h_spec.evaluate(g.nodes))
        v = Field(g, z_spec.evaluate(g.nodes))
        for d in (PLUS, MINUS):
            assert np.max(np.abs(coupling_term_derivative(h, v, v, d).values)) <= 1e-12
