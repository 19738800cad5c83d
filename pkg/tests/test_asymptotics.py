import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shrinkcov.asymptotics import (
    SpectrumSpec,
    deterministic_frobenius,
    deterministic_trace_product,
    phi_limit,
    spectrum_moment,
)
from shrinkcov.errors import ArgError, ConfigError
from shrinkcov.estimators import sample_covariance
from shrinkcov.matrix_core import frobenius_norm_sq, trace_product
from shrinkcov.simulation import covariance_from_spectrum, gaussian_sample, stream

EQ32 = SpectrumSpec.equal([0.1, 5.0, 10.0])
POINT = SpectrumSpec(((1.0, 1.0),))


class TestSpectrumSpec:
    def test_parse_equal(self):
        assert SpectrumSpec.parse("0.1, 5, 10").taus == (0.1, 5.0, 10.0)

    def test_parse_fractions(self):
        h = SpectrumSpec.parse("1:1/3 2:1/3, 60:1/3")
        assert h.taus == (1.0, 2.0, 60.0)
        assert sum(h.masses) == pytest.approx(1.0, abs=1e-15)

    def test_round_trip(self):
        h = SpectrumSpec.parse("1:0.25, 2:0.75")
        assert SpectrumSpec.parse(h.to_text()) == h

    @pytest.mark.parametrize("text", ["", "1:0.5", "a, b", "1:0.5 2", "-1, 2", "1:1/0"])
    def test_parse_errors(self, text):
        with pytest.raises(ConfigError):
            SpectrumSpec.parse(text)

    @pytest.mark.parametrize("atoms", [(), ((0.0, 1.0),), ((1.0, 0.5),), ((1.0, -0.5), (2.0, 1.5))])
    def test_invalid(self, atoms):
        with pytest.raises(ArgError):
            SpectrumSpec(atoms)


class TestMoments:
    def test_point_mass(self):
        assert spectrum_moment(POINT, 2) == 1.0

    def test_eq32(self):
        assert spectrum_moment(EQ32, 1) == pytest.approx(15.1 / 3, rel=1e-15)
        assert spectrum_moment(EQ32, 2) == pytest.approx(125.01 / 3, rel=1e-15)

    def test_unsupported(self):
        with pytest.raises(ArgError):
            spectrum_moment(EQ32, 3)


class TestPhi:
    def test_point_mass(self):
        assert phi_limit(POINT, 0.5) == 1.5

    def test_c_zero(self):
        assert phi_limit(EQ32, 0.0) == spectrum_moment(EQ32, 2)

    def test_eq32_value(self):
        assert phi_limit(EQ32, 1 / 3) == pytest.approx(50.115, abs=5e-4)

    def test_eq32_monte_carlo(self):
        p, n = 300, 900
        sigma = covariance_from_spectrum(EQ32, p)
        vals = [frobenius_norm_sq(sample_covariance(gaussian_sample(sigma, n, stream(5, r)))) / p for r in range(50)]
        assert np.mean(vals) == pytest.approx(phi_limit(EQ32, 1 / 3), rel=0.02)


class TestDeterministicFrobenius:
    def test_identity(self):
        for p in (1, 5, 40):
            assert deterministic_frobenius(np.eye(p), 0.5) == 1.5

    def test_diag(self):
        assert deterministic_frobenius(np.diag([1.0, 2.0]), 1.0) == 4.75

    def test_eq32_matches_limit(self):
        sigma = covariance_from_spectrum(EQ32, 99)
        assert deterministic_frobenius(sigma, 1 / 3) == pytest.approx(phi_limit(EQ32, 1 / 3), abs=1e-10)

    def test_trace_product_equivalent(self):
        sigma = np.diag([1.0, 2.0, 3.0])
        assert deterministic_trace_product(sigma, np.eye(3)) == 2.0


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(0.01, 100.0), min_size=1, max_size=5),
    st.integers(1, 20),
    st.floats(0.0, 5.0),
)
def test_consistency_bridge(taus, blocks, c):
    h = SpectrumSpec.equal(taus)
    sigma = covariance_from_spectrum(h, blocks * len(taus))
    assert deterministic_frobenius(sigma, c) == pytest.approx(phi_limit(h, c), rel=1e-12)


def _median_gaps(c: float, dims, seeds: int = 40):
    frob_gaps, trace_gaps = [], []
    theta_spec = SpectrumSpec.equal([1.0, 2.0, 3.0])
    for p in dims:
        n = round(p / c)
        sigma = covariance_from_spectrum(EQ32, p)
        theta = covariance_from_spectrum(theta_spec, p) / p
        target_frob = deterministic_frobenius(sigma, p / n)
        target_tr = trace_product(sigma, theta) / p
        fg, tg = [], []
        for r in range(seeds):
            s = sample_covariance(gaussian_sample(sigma, n, stream(77, p, r)))
            fg.append(abs(frobenius_norm_sq(s) / p - target_frob))
            tg.append(abs(trace_product(s, theta) / p - target_tr))
        frob_gaps.append(float(np.median(fg)))
        trace_gaps.append(float(np.median(tg)))
    return frob_gaps, trace_gaps


def test_deterministic_equivalents_converge():
    frob, trace = _median_gaps(1 / 3, (30, 90, 270))
    assert frob[0] > frob[1] > frob[2]
    assert trace[0] > trace[1] > trace[2]
