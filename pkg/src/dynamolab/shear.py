"""Out-of-plane shear phase: mollified quadrant step, quadrant integrals, limit matrix.

The phase function is g = f * phi_ell where f equals 1/2 on the two
off-diagonal quadrants {x < 1/2, y >= 1/2} and {x >= 1/2, y < 1/2} and zero
elsewhere, and phi_ell is a periodic Gaussian mollifier implemented as the
Fourier multiplier exp(-ell^2 |k|^2 / 2).  Coefficients of f are analytic:
with u(k) the circle coefficients of the half-open indicator of [1/2, 1)
(1/2 at k = 0, i/(pi k) at odd k, zero otherwise, synthesis convention
g(x) = sum ghat(k) exp(+2 pi i k.x)), the product structure of the two
quadrants gives fhat(k1, k2) = (u(k1) delta(k2) + delta(k1) u(k2)) / 2
- u(k1) u(k2).  All marginal coefficients fhat(k, 0), fhat(0, k) with
k != 0 cancel, so f = 1/4 + sum over odd pairs of exp terms / (pi^2 k1 k2).

A profile with moll_scale == 0 represents the raw step f itself; it is
evaluated through the exact indicator (no Gibbs truncation error) and its
gradient is the almost-everywhere derivative, zero.  The zero profile
(g identically 0) is the anti-dynamo control.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MOLLIFIED = "mollified"
STEP = "step"
ZERO = "zero"


@dataclass(frozen=True)
class ShearProfile:
    """Band-limited Fourier representation of the phase function.

    coeffs[band + k1, band + k2] holds ghat(k1, k2) for |k|_inf <= band;
    conjugate symmetry ghat(-k) = conj(ghat(k)) keeps g real-valued, and
    for the mollified-step family ghat(0, 0) = mean(f) = 1/4.
    """

    coeffs: np.ndarray
    moll_scale: float
    band: int
    kind: str = MOLLIFIED

    def coefficient(self, k1: int, k2: int) -> complex:
        if max(abs(k1), abs(k2)) > self.band:
            return 0.0 + 0.0j
        return complex(self.coeffs[self.band + k1, self.band + k2])

    def c1_bound(self) -> float:
        """Upper bound for the Lipschitz constant: sum of 2 pi |k| |ghat(k)|."""
        k = np.arange(-self.band, self.band + 1)
        kk1, kk2 = np.meshgrid(k, k, indexing="ij")
        return float(np.sum(2.0 * np.pi * np.hypot(kk1, kk2) * np.abs(self.coeffs)))

    def sup_bound(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))


def _indicator_coeffs_1d(band: int) -> np.ndarray:
    """Circle coefficients of the half-open indicator of [1/2, 1)."""
    k = np.arange(-band, band + 1)
    u = np.zeros(2 * band + 1, dtype=complex)
    u[band] = 0.5
    odd = (k % 2) != 0
    u[odd] = 1j / (np.pi * k[odd])
    return u


def build_shear(moll_scale: float, band: int) -> ShearProfile:
    """Mollified quadrant-step profile; moll_scale == 0 gives the raw step."""
    if band < 1:
        raise ValueError("band must be >= 1")
    if moll_scale < 0:
        raise ValueError("mollification scale must be >= 0")
    u = _indicator_coeffs_1d(band)
    delta = np.zeros(2 * band + 1)
    delta[band] = 1.0
    coeffs = 0.5 * (np.outer(u, delta) + np.outer(delta, u)) - np.outer(u, u)
    k = np.arange(-band, band + 1)
    kk1, kk2 = np.meshgrid(k, k, indexing="ij")
    coeffs *= np.exp(-0.5 * moll_scale**2 * (kk1.astype(float) ** 2 + kk2.astype(float) ** 2))
    kind = STEP if moll_scale == 0 else MOLLIFIED
    return ShearProfile(coeffs=coeffs, moll_scale=float(moll_scale), band=int(band), kind=kind)


def zero_shear() -> ShearProfile:
    """The g = 0 control profile."""
    return ShearProfile(coeffs=np.zeros((3, 3), dtype=complex), moll_scale=0.0, band=1, kind=ZERO)


def _step_values(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Exact raw step: 1/2 where exactly one of x >= 1/2, y >= 1/2 holds."""
    ux = (x % 1.0) >= 0.5
    uy = (y % 1.0) >= 0.5
    return np.where(ux ^ uy, 0.5, 0.0)


def shear_values(profile: ShearProfile, points: np.ndarray) -> np.ndarray:
    """Evaluate g at an array of points with shape (..., 2)."""
    pts = np.asarray(points, dtype=float)
    x, y = pts[..., 0], pts[..., 1]
    if profile.kind == ZERO:
        return np.zeros_like(x)
    if profile.kind == STEP:
        return _step_values(x, y)
    k = np.arange(-profile.band, profile.band + 1)
    ex = np.exp(2j * np.pi * np.multiply.outer(x, k))
    ey = np.exp(2j * np.pi * np.multiply.outer(y, k))
    vals = np.einsum("...a,ab,...b->...", ex, profile.coeffs, ey)
    return vals.real


def shear_gradient(profile: ShearProfile, points: np.ndarray) -> np.ndarray:
    """Gradient of g at points of shape (..., 2); returns shape (..., 2).

    For the step and zero profiles this is the almost-everywhere derivative,
    identically zero (those profiles are not C^1 and are excluded from the
    operators that need the gradient).
    """
    pts = np.asarray(points, dtype=float)
    x, y = pts[..., 0], pts[..., 1]
    if profile.kind in (ZERO, STEP):
        return np.zeros(pts.shape, dtype=float)
    k = np.arange(-profile.band, profile.band + 1)
    ex = np.exp(2j * np.pi * np.multiply.outer(x, k))
    ey = np.exp(2j * np.pi * np.multiply.outer(y, k))
    cx = profile.coeffs * (2j * np.pi * k)[:, None]
    cy = profile.coeffs * (2j * np.pi * k)[None, :]
    gx = np.einsum("...a,ab,...b->...", ex, cx, ey).real
    gy = np.einsum("...a,ab,...b->...", ex, cy, ey).real
    return np.stack([gx, gy], axis=-1)


def _tensor_values(profile: ShearProfile, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """g on the tensor grid x cross y (separable evaluation, O(m K^2 + m^2 K))."""
    if profile.kind == ZERO:
        return np.zeros((x.size, y.size))
    if profile.kind == STEP:
        return _step_values(x[:, None], y[None, :])
    k = np.arange(-profile.band, profile.band + 1)
    ex = np.exp(2j * np.pi * np.outer(x, k))
    ey = np.exp(2j * np.pi * np.outer(y, k))
    return (ex @ profile.coeffs @ ey.T).real


def sample_on_grid(profile: ShearProfile, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Sample g and grad g on the n x n lattice (i/n, j/n), indexed [i, j].

    Uses an FFT synthesis with the band clipped to n//2 - 1 so that
    conjugate symmetry survives on the grid; the clipped tail is part of the
    truncation already inherent in the band-limited profile.
    """
    if n % 2 != 0 or n <= 0:
        raise ValueError("grid size must be a positive even integer")
    x = np.arange(n) / n
    if profile.kind in (ZERO, STEP):
        g = _tensor_values(profile, x, x)
        return g, np.zeros((2, n, n))
    b = min(profile.band, n // 2 - 1)
    k = np.arange(-b, b + 1)
    spec = np.zeros((n, n), dtype=complex)
    lo = profile.band - b
    block = profile.coeffs[lo : lo + 2 * b + 1, lo : lo + 2 * b + 1]
    idx = k % n
    spec[np.ix_(idx, idx)] = block
    g = np.fft.ifft2(spec) * n * n
    if np.max(np.abs(g.imag)) > 1e-9:
        raise AssertionError("phase samples acquired a spurious imaginary part")
    gx = np.fft.ifft2(spec * (2j * np.pi * np.fft.fftfreq(n, d=1.0 / n))[:, None]) * n * n
    gy = np.fft.ifft2(spec * (2j * np.pi * np.fft.fftfreq(n, d=1.0 / n))[None, :]) * n * n
    return g.real, np.stack([gx.real, gy.real])


# ---------------------------------------------------------------------------
# quadrant integrals and the rank-1 limit matrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadrantIntegrals:
    """Integrals of exp(2 pi i g) over the four quadrants, Q1..Q4 in the order
    {x>=1/2,y>=1/2}, {x<1/2,y>=1/2}, {x<1/2,y<1/2}, {x>=1/2,y<1/2}."""

    values: np.ndarray
    richardson_error: float
    m_q: int


def _quadrant_sums(profile: ShearProfile, m: int) -> np.ndarray:
    mid = (np.arange(m) + 0.5) / m
    e = np.exp(2j * np.pi * _tensor_values(profile, mid, mid))
    hi = mid >= 0.5
    lo = ~hi
    q1 = e[np.ix_(hi, hi)].sum()
    q2 = e[np.ix_(lo, hi)].sum()
    q3 = e[np.ix_(lo, lo)].sum()
    q4 = e[np.ix_(hi, lo)].sum()
    return np.array([q1, q2, q3, q4]) / (m * m)


def quadrant_integrals(profile: ShearProfile, m_q: int = 512) -> QuadrantIntegrals:
    """Composite midpoint quadrature of exp(2 pi i g) per quadrant.

    m_q must be even so no cell straddles x = 1/2 or y = 1/2; the reported
    error is the Richardson difference between the m_q and 2 m_q grids and
    the returned values come from the finer grid.
    """
    if m_q < 64:
        raise ValueError("quadrature grid must satisfy m_q >= 64")
    if m_q % 2 != 0:
        raise ValueError("m_q must be even so cells align with the quadrant boundaries")
    coarse = _quadrant_sums(profile, m_q)
    fine = _quadrant_sums(profile, 2 * m_q)
    err = float(np.max(np.abs(fine - coarse)))
    return QuadrantIntegrals(values=fine, richardson_error=err, m_q=m_q)


@dataclass(frozen=True)
class LimitMatrix:
    """Rank-one limit data: 2x2 matrix with eigenvalues {0, mu}."""

    entries: np.ndarray
    mu: complex
    quad_error: float

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.entries)


def limit_matrix(profile: ShearProfile, m_q: int = 512) -> LimitMatrix:
    """Assemble the limit matrix from quadrant integrals.

    M = [[Q1-Q4, Q4-Q1], [Q2-Q3, Q3-Q2]] and mu = Q1+Q3-Q2-Q4; the trace
    equals mu and the determinant vanishes identically, which is asserted
    up to the quadrature error.
    """
    quad = quadrant_integrals(profile, m_q)
    q1, q2, q3, q4 = quad.values
    m = np.array([[q1 - q4, q4 - q1], [q2 - q3, q3 - q2]])
    mu = q1 + q3 - q2 - q4
    tol = max(10.0 * quad.richardson_error, 1e-12)
    if abs(np.trace(m) - mu) > tol:
        raise AssertionError("limit-matrix trace drifted from mu beyond quadrature error")
    if abs(np.linalg.det(m)) > tol:
        raise AssertionError("limit matrix is not rank one to quadrature tolerance")
    return LimitMatrix(entries=m, mu=complex(mu), quad_error=quad.richardson_error)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_profile(path: str, profile: ShearProfile) -> None:
    np.savez(
        path,
        coeffs=profile.coeffs,
        moll_scale=profile.moll_scale,
        band=profile.band,
        kind=profile.kind,
    )


def load_profile(path: str) -> ShearProfile:
    data = np.load(path, allow_pickle=False)
    return ShearProfile(
        coeffs=data["coeffs"],
        moll_scale=float(data["moll_scale"]),
        band=int(data["band"]),
        kind=str(data["kind"]),
    )
