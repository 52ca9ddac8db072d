"""Grid fields: norms, spectral calculus, divergence-free completion, checkpoints."""

import numpy as np
import pytest

from dynamolab.fields import (
    Field3,
    c1_proxy,
    divergence3,
    inner,
    l2_norm,
    load_field,
    load_field3,
    make_div_free,
    random_div_free,
    random_field,
    save_field,
    spectral_derivative,
)


def mode(n, k1, k2):
    x = np.arange(n) / n
    return np.exp(2j * np.pi * (k1 * x[:, None] + k2 * x[None, :]))


def test_norm_examples():
    n = 32
    assert abs(l2_norm(np.ones((n, n), dtype=complex)) - 1.0) < 1e-14
    assert abs(l2_norm(mode(n, 1, 0)) - 1.0) < 1e-14


def test_inner_conjugate_linear_and_mismatch():
    n = 16
    f, g = mode(n, 1, 0), mode(n, 1, 0)
    assert abs(inner(f, 1j * g) - (-1j)) < 1e-14
    with pytest.raises(ValueError):
        inner(np.ones((16, 16)), np.ones((8, 8)))


def test_fft_roundtrip_identity():
    n = 128
    f = random_field(11, n)
    back = np.fft.ifft2(np.fft.fft2(f, axes=(-2, -1)), axes=(-2, -1))
    assert np.max(np.abs(back - f)) < 1e-12


def test_parseval():
    n = 64
    for seed in range(20):
        f = random_field(seed, n, band=20)[0]
        coef = np.fft.fft2(f) / n**2
        assert abs(l2_norm(f) - np.linalg.norm(coef)) < 1e-12


def test_spectral_derivative_examples():
    n = 64
    f = mode(n, 1, 0)
    assert np.allclose(spectral_derivative(f, 0), 2j * np.pi * f, atol=1e-12)
    assert np.max(np.abs(spectral_derivative(np.ones((n, n)), 0))) < 1e-13
    assert np.allclose(spectral_derivative(f, 1), 0.0, atol=1e-13)


def test_spectral_derivative_vs_finite_differences():
    n = 256
    f = random_field(3, n, band=8)[0]
    df = spectral_derivative(f, 0)
    fd = (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) * n / 2.0
    # relative symbol error of second-order differences: 1 - sinc <= (2 pi k / n)^2 / 6
    assert np.max(np.abs(df - fd)) / np.max(np.abs(df)) < (2 * np.pi * 8 / n) ** 2 / 6


def test_divergence3_examples():
    n = 64
    h = np.stack([mode(n, 1, 0), np.zeros((n, n), dtype=complex)])
    b = Field3(h=h, h3=-mode(n, 1, 0))
    assert l2_norm(divergence3(b)) < 1e-12
    b2 = Field3(h=np.zeros((2, n, n), dtype=complex), h3=np.ones((n, n), dtype=complex))
    assert np.allclose(divergence3(b2), 2j * np.pi, atol=1e-14)


def test_make_div_free():
    n = 64
    h = np.stack([mode(n, 1, 0), np.zeros((n, n), dtype=complex)])
    b = make_div_free(h)
    assert np.allclose(b.h3, -mode(n, 1, 0), atol=1e-12)
    const = make_div_free(np.ones((2, n, n), dtype=complex))
    assert np.max(np.abs(const.h3)) < 1e-13
    for seed in range(20):
        b = random_div_free(seed, n, band=16)
        assert l2_norm(divergence3(b)) < 1e-10


def test_random_field_determinism():
    a = random_field(42, 64)
    b = random_field(42, 64)
    c = random_field(43, 64)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert np.isfinite(c1_proxy(random_field(1, 64, decay=3.0, band=16)[0]))


def test_field_checkpoint_roundtrip(tmp_path):
    n = 32
    f = random_field(9, n, band=8)
    path = str(tmp_path / "field.bin")
    save_field(path, f)
    assert np.array_equal(load_field(path), f)
    b = random_div_free(10, n, band=8)
    path3 = str(tmp_path / "field3.bin")
    save_field(path3, b)
    back = load_field3(path3)
    assert np.array_equal(back.h, b.h)
    assert np.array_equal(back.h3, b.h3)
    scalar = f[0]
    path1 = str(tmp_path / "scalar.bin")
    save_field(path1, scalar)
    assert np.array_equal(load_field(path1), scalar)
