"""Shear phase profile: analytic coefficients, quadrant integrals, limit matrix."""

import numpy as np
import pytest

from dynamolab.shear import (
    build_shear,
    limit_matrix,
    load_profile,
    quadrant_integrals,
    sample_on_grid,
    save_profile,
    shear_gradient,
    shear_values,
    zero_shear,
    _tensor_values,
)


def conv_oracle_1d(scale, m=8192):
    """Real-space convolution of the half-open step with the periodized
    Gaussian kernel of Fourier symbol exp(-scale^2 k^2 / 2), by quadrature.
    Independent of the Fourier-side construction under test."""
    ys = (np.arange(m) + 0.5) / m
    theta = np.zeros(m)
    for shift in range(-3, 4):
        theta += np.exp(-2.0 * np.pi**2 * (ys - shift) ** 2 / scale**2)
    theta *= np.sqrt(2.0 * np.pi) / scale / m
    def u_conv(x):
        step = ((x - ys) % 1.0) >= 0.5
        return float(np.sum(step * theta))
    return u_conv


def test_coefficient_values_against_convolution_oracle():
    scale = 0.05
    prof = build_shear(scale, 32)
    assert abs(prof.coefficient(0, 0) - 0.25) < 1e-14
    # marginal coefficients cancel in the two-quadrant combination
    assert abs(prof.coefficient(1, 0)) < 1e-14
    assert abs(prof.coefficient(0, 3)) < 1e-14
    # both-odd coefficient: -u(k1) u(k2) times the Gaussian factor
    expect_11 = np.exp(-scale**2) / np.pi**2
    assert abs(prof.coefficient(1, 1) - expect_11) < 1e-14
    # cross-check (1, 1) by 2d quadrature of the real-space convolution
    u = conv_oracle_1d(scale)
    m = 256
    xs = (np.arange(m) + 0.5) / m
    ux = np.array([u(x) for x in xs])
    g_vals = 0.5 * (ux[:, None] + ux[None, :] - 2.0 * np.outer(ux, ux))
    phase = np.exp(-2j * np.pi * xs)
    coef = phase @ g_vals @ phase / m**2
    assert abs(coef - prof.coefficient(1, 1)) < 1e-5


def test_conjugate_symmetry_and_real_values():
    prof = build_shear(0.05, 24)
    k = prof.band
    flipped = np.conj(prof.coeffs[::-1, ::-1])
    assert np.allclose(prof.coeffs, flipped, atol=1e-15)
    rng = np.random.default_rng(0)
    pts = rng.random((1000, 2))
    vals = np.einsum(
        "pa,ab,pb->p",
        np.exp(2j * np.pi * np.outer(pts[:, 0], np.arange(-k, k + 1))),
        prof.coeffs,
        np.exp(2j * np.pi * np.outer(pts[:, 1], np.arange(-k, k + 1))),
    )
    assert np.max(np.abs(vals.imag)) < 1e-12


def test_eval_against_convolution_oracle():
    scale = 0.05
    prof = build_shear(scale, 64)
    u = conv_oracle_1d(scale)
    for x, y in [(0.3, 0.7), (0.8, 0.2), (0.55, 0.51)]:
        ux, uy = u(x), u(y)
        expect = 0.5 * (ux + uy - 2 * ux * uy)
        got = float(shear_values(prof, np.array([x, y])))
        assert abs(got - expect) < 2e-3  # band-64 truncation tail


def test_eval_quadrant_interiors():
    prof = build_shear(0.02, 128)
    assert abs(shear_values(prof, np.array([0.75, 0.75]))) < 1e-3      # inside Q1, f = 0
    assert abs(shear_values(prof, np.array([0.25, 0.75])) - 0.5) < 1e-3  # inside Q2, f = 1/2


def test_gradient_matches_finite_differences():
    prof = build_shear(0.05, 32)
    h = 1e-5
    rng = np.random.default_rng(1)
    for _ in range(20):
        x, y = rng.random(2)
        gx = (shear_values(prof, np.array([x + h, y])) - shear_values(prof, np.array([x - h, y]))) / (2 * h)
        gy = (shear_values(prof, np.array([x, y + h])) - shear_values(prof, np.array([x, y - h]))) / (2 * h)
        grad = shear_gradient(prof, np.array([x, y]))
        # central differences carry an O(h^2 |g'''|) truncation error, ~2e-7 here
        assert abs(grad[0] - gx) < 5e-6
        assert abs(grad[1] - gy) < 5e-6


def test_step_profile_evaluates_exactly():
    prof = build_shear(0.0, 16)
    assert prof.kind == "step"
    assert float(shear_values(prof, np.array([0.25, 0.75]))) == 0.5
    assert float(shear_values(prof, np.array([0.75, 0.75]))) == 0.0
    assert np.all(shear_gradient(prof, np.array([0.3, 0.4])) == 0.0)


def test_quadrant_integrals_step():
    quad = quadrant_integrals(build_shear(0.0, 16), 64)
    assert np.allclose(quad.values, [0.25, -0.25, 0.25, -0.25], atol=1e-12)


def test_quadrant_integrals_zero_profile():
    quad = quadrant_integrals(zero_shear(), 64)
    assert np.allclose(quad.values, [0.25, 0.25, 0.25, 0.25], atol=1e-15)


def test_quadrant_integrals_validation():
    with pytest.raises(ValueError):
        quadrant_integrals(zero_shear(), 32)
    with pytest.raises(ValueError):
        quadrant_integrals(zero_shear(), 65)


def test_mu_lower_bound_small_scale():
    lm = limit_matrix(build_shear(0.02, 128), 256)
    assert abs(lm.mu) >= 0.5


def test_limit_matrix_step_values():
    lm = limit_matrix(build_shear(0.0, 16), 64)
    assert np.allclose(lm.entries, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-12)
    assert abs(lm.mu - 1.0) < 1e-12


def test_limit_matrix_zero_profile():
    lm = limit_matrix(zero_shear(), 64)
    assert abs(lm.mu) < 1e-15
    assert np.max(np.abs(lm.entries)) < 1e-15


def test_limit_matrix_rank_one_spectrum():
    for scale in (0.1, 0.02):
        lm = limit_matrix(build_shear(scale, 64), 128)
        eig = sorted(lm.eigenvalues(), key=abs)
        assert abs(eig[0]) < 1e-10
        assert abs(eig[1] - lm.mu) < 1e-10
        assert abs(np.trace(lm.entries) - lm.mu) < 1e-12


def test_mu_monotone_toward_step():
    mus = [abs(limit_matrix(build_shear(s, 64), 128).mu) for s in (0.2, 0.1, 0.05, 0.02)]
    for a, b in zip(mus, mus[1:]):
        assert b >= a - 1e-3
    assert mus[-1] > 0.9


def test_mean_preserved_under_mollification():
    # quadrant integrals of g itself sum to the mean of the step, 1/4
    for scale in (0.1, 0.02):
        prof = build_shear(scale, 64)
        m = 256
        mid = (np.arange(m) + 0.5) / m
        g = _tensor_values(prof, mid, mid)
        assert abs(g.mean() - 0.25) < 1e-6


def test_grid_sampling_matches_pointwise():
    prof = build_shear(0.05, 32)
    n = 128
    g, grad = sample_on_grid(prof, n)
    xs = np.arange(n) / n
    for i, j in [(0, 0), (17, 80), (64, 3)]:
        assert abs(g[i, j] - float(shear_values(prof, np.array([xs[i], xs[j]])))) < 1e-12
        gr = shear_gradient(prof, np.array([xs[i], xs[j]]))
        assert np.allclose(grad[:, i, j], gr, atol=1e-10)


def test_c1_bound_is_finite_and_positive():
    prof = build_shear(0.02, 128)
    assert 0 < prof.sup_bound() < 10
    assert 0 < prof.c1_bound() < 1e4


def test_profile_serialization_roundtrip(tmp_path):
    prof = build_shear(0.05, 16)
    path = str(tmp_path / "profile.npz")
    save_profile(path, prof)
    back = load_profile(path)
    assert back.kind == prof.kind
    assert back.band == prof.band
    assert back.moll_scale == prof.moll_scale
    assert np.array_equal(back.coeffs, prof.coeffs)
