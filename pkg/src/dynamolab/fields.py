"""Complex grid fields on the torus with spectral calculus.

A scalar field is an (n, n) complex array, f[i, j] = f(i/n, j/n); a planar
vector field stacks two components into shape (2, n, n).  A grid field
denotes its trigonometric interpolant, so norms and derivatives below are
exact for that interpolant.  The three-dimensional magnetic ansatz
B(x, y, z) = exp(2 pi i z) (h, h3) is carried as the pair (h, h3).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Field3:
    """Planar components h (2, n, n) and vertical component h3 (n, n) of the
    single-z-mode ansatz exp(2 pi i z) (h, h3)."""

    h: np.ndarray
    h3: np.ndarray

    @property
    def n(self) -> int:
        return self.h.shape[-1]

    def copy(self) -> "Field3":
        return Field3(self.h.copy(), self.h3.copy())


def grid_size(f: np.ndarray | Field3) -> int:
    if isinstance(f, Field3):
        return f.n
    return f.shape[-1]


def l2_norm(f: np.ndarray | Field3) -> float:
    """Grid L2 norm: sqrt of (1/n^2) sum of |f|^2 over points and components."""
    if isinstance(f, Field3):
        n2 = f.h.shape[-1] * f.h.shape[-2]
        return float(np.sqrt((np.vdot(f.h, f.h).real + np.vdot(f.h3, f.h3).real) / n2))
    f = np.asarray(f)
    n2 = f.shape[-1] * f.shape[-2]
    return float(np.sqrt(np.vdot(f, f).real / n2))


def inner(f: np.ndarray, g: np.ndarray) -> complex:
    """Grid inner product (1/n^2) sum f conj(g); conjugate-linear in g."""
    f, g = np.asarray(f), np.asarray(g)
    if f.shape != g.shape:
        raise ValueError(f"field shapes differ: {f.shape} vs {g.shape}")
    n2 = f.shape[-1] * f.shape[-2]
    return complex(np.vdot(g, f) / n2)


def _wavenumbers(n: int) -> np.ndarray:
    return np.fft.fftfreq(n, d=1.0 / n)


def spectral_derivative(f: np.ndarray, axis: int) -> np.ndarray:
    """Derivative along grid axis 0 (x) or 1 (y) via the 2 pi i k multiplier.

    The Nyquist mode k = -n/2 has no well-defined odd derivative and is set
    to zero, the usual convention for even grids.
    """
    f = np.asarray(f)
    n = f.shape[-1]
    k = _wavenumbers(n)
    mult = 2j * np.pi * k
    mult[np.abs(k) == n // 2] = 0.0
    shape = [1] * f.ndim
    shape[-2 if axis == 0 else -1] = n
    fhat = np.fft.fft2(f, axes=(-2, -1))
    return np.fft.ifft2(fhat * mult.reshape(shape), axes=(-2, -1))


def divergence3(b: Field3) -> np.ndarray:
    """Divergence of the z-mode ansatz: dx h1 + dy h2 + 2 pi i h3."""
    return (
        spectral_derivative(b.h[0], axis=0)
        + spectral_derivative(b.h[1], axis=1)
        + 2j * np.pi * b.h3
    )


def make_div_free(h: np.ndarray) -> Field3:
    """Complete planar components with the vertical one that kills the divergence:
    h3 = (i / 2 pi) (dx h1 + dy h2)."""
    h = np.asarray(h)
    div2 = spectral_derivative(h[0], axis=0) + spectral_derivative(h[1], axis=1)
    return Field3(h=h.astype(complex), h3=(1j / (2.0 * np.pi)) * div2)


def relative_divergence(b: Field3) -> float:
    """Scale-free divergence residual |div B| / (2 pi |B|)."""
    nb = l2_norm(b)
    if nb == 0.0:
        return 0.0
    return l2_norm(divergence3(b)) / (2.0 * np.pi * nb)


# ---------------------------------------------------------------------------
# seeded band-limited fields
# ---------------------------------------------------------------------------

def random_field(seed, n: int, decay: float = 3.0, band: int = 16) -> np.ndarray:
    """Deterministic band-limited planar field with |coeff| ~ (1+|k|)^-decay.

    Coefficients are complex Gaussian draws (no conjugate symmetry imposed;
    the z-mode ansatz forces complex data anyway).
    """
    if band >= n // 2:
        raise ValueError("band must be below the grid Nyquist frequency")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    k = np.arange(-band, band + 1)
    kk1, kk2 = np.meshgrid(k, k, indexing="ij")
    amp = (1.0 + np.hypot(kk1, kk2)) ** (-decay)
    draws = rng.standard_normal((2, k.size, k.size)) + 1j * rng.standard_normal((2, k.size, k.size))
    spec = np.zeros((2, n, n), dtype=complex)
    idx = k % n
    spec[np.ix_([0, 1], idx, idx)] = draws * amp
    return np.fft.ifft2(spec, axes=(-2, -1)) * n * n


def random_scalar(seed, n: int, decay: float = 3.0, band: int = 16) -> np.ndarray:
    return random_field(seed, n, decay=decay, band=band)[0]


def random_div_free(seed, n: int, decay: float = 3.0, band: int = 16) -> Field3:
    return make_div_free(random_field(seed, n, decay=decay, band=band))


def c1_proxy(f: np.ndarray) -> float:
    """Coefficient-sum bound on sup|f| + sup|grad f| for the interpolant."""
    f = np.asarray(f)
    n = f.shape[-1]
    k = _wavenumbers(n)
    kk = np.hypot(*np.meshgrid(k, k, indexing="ij"))
    co = np.abs(np.fft.fft2(f, axes=(-2, -1))) / (n * n)
    return float(np.sum(co * (1.0 + 2.0 * np.pi * kk)))


# ---------------------------------------------------------------------------
# flat binary checkpoint layout: int64 n, int64 ncomp, complex128 row-major
# ---------------------------------------------------------------------------

def save_field(path: str, f: np.ndarray | Field3) -> None:
    if isinstance(f, Field3):
        data = np.concatenate([f.h, f.h3[None]], axis=0)
    else:
        data = np.asarray(f, dtype=complex)
        if data.ndim == 2:
            data = data[None]
    n = data.shape[-1]
    with open(path, "wb") as fh:
        np.array([n, data.shape[0]], dtype=np.int64).tofile(fh)
        data.astype(np.complex128).tofile(fh)


def load_field(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        header = np.fromfile(fh, dtype=np.int64, count=2)
        n, ncomp = int(header[0]), int(header[1])
        data = np.fromfile(fh, dtype=np.complex128).reshape(ncomp, n, n)
    return data[0] if ncomp == 1 else data


def load_field3(path: str) -> Field3:
    data = load_field(path)
    if data.ndim != 3 or data.shape[0] != 3:
        raise ValueError("checkpoint does not hold a three-component field")
    return Field3(h=data[:2].copy(), h3=data[2].copy())
