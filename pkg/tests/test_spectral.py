import math

import numpy as np
import pytest
from pydantic import ValidationError

from snls_mix.spectral import (
    SpectralField,
    analyze,
    gagliardo_nirenberg_ratio,
    linear_flow,
    lp_norm,
    nonlinear_grid_size,
    nonlinearity,
    project,
    sobolev_norm,
    synthesize,
)
from snls_mix.utils.errors import DimensionError, ParameterError

from helpers import random_field


def test_synthesize_single_mode_matches_sine():
    grid = synthesize(SpectralField.mode(3, 8, 2.0 - 1.0j), Q=20)
    expected = (2.0 - 1.0j) * math.sqrt(2.0) * np.sin(3 * np.pi * grid.points)
    assert np.allclose(grid.samples, expected, atol=1e-12)


def test_analyze_inverts_synthesize(rng):
    u = random_field(rng, 16, active=16)
    back = analyze(synthesize(u, Q=40), 16)
    assert np.allclose(back.coeffs, u.coeffs, atol=1e-12)


def test_grid_smaller_than_truncation_is_rejected():
    with pytest.raises(DimensionError):
        synthesize(SpectralField.zeros(8), Q=4)


def test_sobolev_norm_of_single_mode():
    u = SpectralField.mode(4, 10, 3.0j)
    assert sobolev_norm(u, 0) == pytest.approx(3.0)
    assert sobolev_norm(u, 1) == pytest.approx(4 * math.pi * 3.0)
    assert sobolev_norm(u, 2) == pytest.approx((4 * math.pi) ** 2 * 3.0)
    with pytest.raises(ParameterError):
        sobolev_norm(u, -1)


def test_lp_norms_of_first_mode():
    e1 = SpectralField.mode(1, 8)
    assert lp_norm(e1, 2) == pytest.approx(1.0, rel=1e-12)
    # int 4 sin^4 = 3/2
    assert lp_norm(e1, 4) ** 4 == pytest.approx(1.5, rel=1e-12)
    with pytest.raises(ParameterError):
        lp_norm(e1, 0.5)


def test_l2_norm_agrees_with_parseval(rng):
    u = random_field(rng, 12, active=12)
    assert lp_norm(u, 2) == pytest.approx(sobolev_norm(u, 0), rel=1e-10)


def test_projectors_split_the_field(rng):
    u = random_field(rng, 10, active=10)
    low, high = project(u, 3, "low"), project(u, 3, "high")
    assert np.allclose((low + high).coeffs, u.coeffs)
    assert np.all(low.coeffs[3:] == 0) and np.all(high.coeffs[:3] == 0)
    with pytest.raises(DimensionError):
        project(u, 11, "low")


def test_cubic_nonlinearity_is_dealiased():
    a = 0.7 + 0.2j
    out = nonlinearity(SpectralField.mode(1, 8, a), 1.0)
    expected = np.zeros(8, dtype=np.complex128)
    expected[0] = 1.5 * abs(a) ** 2 * a
    expected[2] = -0.5 * abs(a) ** 2 * a
    assert np.allclose(out.coeffs, expected, atol=1e-12)


def test_nonlinearity_with_zero_exponent_is_identity(rng):
    u = random_field(rng, 8)
    assert np.allclose(nonlinearity(u, 0.0).coeffs, u.coeffs, atol=1e-12)
    assert nonlinear_grid_size(8, 0.0) == 8
    assert nonlinear_grid_size(8, 1.5) == 24


def test_linear_flow_rotates_and_damps():
    u = SpectralField.mode(2, 4, 1.0)
    out = linear_flow(u, 0.3, 0.5)
    mu = (2 * math.pi) ** 2
    assert out.coeffs[1] == pytest.approx(np.exp(-(1j * mu + 0.5) * 0.3))
    assert abs(out.coeffs[1]) == pytest.approx(math.exp(-0.15))


def test_gagliardo_nirenberg_ratio_of_first_mode():
    assert gagliardo_nirenberg_ratio(SpectralField.zeros(8), 1.0) == 0.0
    # |u|_4^4 = 3/2 a^4, ||u||_1 = pi a, |u|_2 = a
    for a in (0.1, 1.0, 10.0):
        assert gagliardo_nirenberg_ratio(SpectralField.mode(1, 16, a), 1.0) == pytest.approx(1.5 / math.pi, rel=1e-10)


def test_fields_are_immutable():
    u = SpectralField.mode(1, 4)
    with pytest.raises(ValueError):
        u.coeffs[0] = 2.0
    with pytest.raises(ValidationError):
        SpectralField(coeffs=[1.0, np.nan])
