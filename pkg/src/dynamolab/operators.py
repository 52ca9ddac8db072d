"""Transfer operators of the pulsed dynamo: ideal push-forward, rank-1 limit,
shear coupling, heat semigroup, and the composed pulsed steps.

The ideal planar push-forward is exact on the lattice: the inverse map is a
permutation of grid points (integer arithmetic mod n) and the derivative is
the constant branch matrix of the backward region, so no interpolation ever
enters an advection step.  Heat acts as the exact Fourier multiplier on the
trigonometric interpolant, so a full pulsed period carries no splitting
error; the only discretization error anywhere is spatial truncation.

The vertical structure follows from the time-1 map (T(x,y), z - g(T(x,y))):
its derivative has third row (-grad g(T) . DT, 1), so under the single
z-mode ansatz the advected vertical component at a target point p is
-grad g(p) . (push h)(p) + h3(T^inverse p), and every component picks up
the smooth phase factor exp(2 pi i g).  A pulsed period then multiplies by
exp(-4 pi^2 eps), the heat factor of the z-mode itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Field3, l2_norm
from .map_core import check_alpha, grid_pullback_table, branch_matrix, PullbackTable
from .shear import ShearProfile, sample_on_grid


@dataclass(frozen=True)
class OperatorContext:
    """Immutable per-(alpha, n, g, eps) data shared by all operator applications."""

    alpha: int
    n: int
    eps: float
    pullback: PullbackTable
    mat: np.ndarray      # (2, 2, n, n) branch-matrix entries at each target point
    e2pig: np.ndarray    # (n, n) unit-modulus phase samples exp(2 pi i g)
    grad_g: np.ndarray   # (2, n, n) gradient samples of g
    profile: ShearProfile


def make_context(alpha: int, n: int, profile: ShearProfile, eps: float) -> OperatorContext:
    check_alpha(alpha)
    if eps < 0:
        raise ValueError("diffusivity must be >= 0")
    table = grid_pullback_table(n, alpha)
    mat = np.empty((2, 2, n, n), dtype=np.int64)
    for idx in (1, 2, 3, 4):
        a = branch_matrix(alpha, idx)
        mask = table.region == idx
        for r in range(2):
            for c in range(2):
                mat[r, c][mask] = a[r, c]
    g, grad = sample_on_grid(profile, n)
    e2pig = np.exp(2j * np.pi * g)
    if np.max(np.abs(np.abs(e2pig) - 1.0)) > 1e-12:
        raise AssertionError("phase samples are not unimodular")
    return OperatorContext(
        alpha=alpha, n=n, eps=float(eps), pullback=table, mat=mat, e2pig=e2pig,
        grad_g=grad, profile=profile,
    )


# ---------------------------------------------------------------------------
# exact ideal advection
# ---------------------------------------------------------------------------

def compose_inverse(f: np.ndarray, ctx: OperatorContext) -> np.ndarray:
    """Exact composition f o T^inverse on the lattice (a permutation)."""
    t = ctx.pullback
    return np.asarray(f)[..., t.src_i, t.src_j]


def pushforward_ideal(h: np.ndarray, ctx: OperatorContext) -> np.ndarray:
    """Unnormalized vector push-forward (DT h) o T^inverse, exact on the grid."""
    h = np.asarray(h)
    if h.shape != (2, ctx.n, ctx.n):
        raise ValueError(f"expected a (2, {ctx.n}, {ctx.n}) field, got {h.shape}")
    hq = compose_inverse(h, ctx)
    out = np.empty_like(hq)
    out[0] = ctx.mat[0, 0] * hq[0] + ctx.mat[0, 1] * hq[1]
    out[1] = ctx.mat[1, 0] * hq[0] + ctx.mat[1, 1] * hq[1]
    return out


def pushforward_normalized(h: np.ndarray, ctx: OperatorContext) -> np.ndarray:
    """The alpha^-2-normalized push-forward (amplitude O(1) on smooth data)."""
    return pushforward_ideal(h, ctx) / float(ctx.alpha**2)


def limit_pushforward(h: np.ndarray) -> np.ndarray:
    """Rank-one strong-chaos limit of the normalized push-forward.

    First component: (integral of h1 over {x >= 1/2} minus over {x < 1/2})
    times the sign pattern of {y >= 1/2}; second component zero.  Squares to
    zero: the sign pattern itself has equal half-plane integrals.
    """
    h = np.asarray(h)
    n = h.shape[-1]
    half = n // 2
    quad = h[0].sum(axis=1)  # x-resolved sums over y
    plus = quad[half:].sum() / (n * n)
    minus = quad[:half].sum() / (n * n)
    sign = np.where(np.arange(n) >= half, 1.0, -1.0)[None, :]
    out = np.zeros_like(h)
    out[0] = (plus - minus) * sign
    return out


def shear_coupling(h: np.ndarray, ctx: OperatorContext) -> np.ndarray:
    """Vertical coupling: -grad g . (push h), the third-row derivative term."""
    u = pushforward_ideal(h, ctx)
    return -(ctx.grad_g[0] * u[0] + ctx.grad_g[1] * u[1])


# ---------------------------------------------------------------------------
# heat semigroup
# ---------------------------------------------------------------------------

def apply_heat(f: np.ndarray, eps: float) -> np.ndarray:
    """Time-1 heat flow: multiplier exp(-4 pi^2 eps |k|^2) per Fourier mode."""
    if eps < 0:
        raise ValueError("diffusivity must be >= 0")
    f = np.asarray(f)
    if eps == 0:
        return f.copy()
    n = f.shape[-1]
    k = np.fft.fftfreq(n, d=1.0 / n)
    mult = np.exp(-4.0 * np.pi**2 * eps * (k[:, None] ** 2 + k[None, :] ** 2))
    return np.fft.ifft2(np.fft.fft2(f, axes=(-2, -1)) * mult, axes=(-2, -1))


def zmode_heat_factor(eps: float) -> float:
    """Heat factor of the z-mode carrier exp(2 pi i z)."""
    return float(np.exp(-4.0 * np.pi**2 * eps))


# ---------------------------------------------------------------------------
# pulsed periods
# ---------------------------------------------------------------------------

def pulsed_step_planar(h: np.ndarray, ctx: OperatorContext, normalized: bool = False) -> np.ndarray:
    """One planar pulsed period: heat o (phase multiply) o push-forward.

    With normalized=True the output is divided by alpha^2, the conditioning
    used by the spectral routines (eigenvalues are rescaled on report).
    """
    out = apply_heat(ctx.e2pig * pushforward_ideal(h, ctx), ctx.eps)
    if normalized:
        out = out / float(ctx.alpha**2)
    return out


def pulsed_step_3d(b: Field3, ctx: OperatorContext) -> Field3:
    """One full pulsed period of the z-mode ansatz (advect one unit, diffuse one unit)."""
    if b.n != ctx.n:
        raise ValueError("field grid does not match the operator context")
    zfac = zmode_heat_factor(ctx.eps)
    u = pushforward_ideal(b.h, ctx)
    planar = zfac * apply_heat(ctx.e2pig * u, ctx.eps)
    coupling = -(ctx.grad_g[0] * u[0] + ctx.grad_g[1] * u[1])
    vertical = zfac * apply_heat(ctx.e2pig * (coupling + compose_inverse(b.h3, ctx)), ctx.eps)
    return Field3(h=planar, h3=vertical)


def vertical_step(h3: np.ndarray, ctx: OperatorContext) -> np.ndarray:
    """Third-component pulsed step; a strict contraction (factor exp(-4 pi^2 eps)),
    which is what makes the vertical completion solvable, so eps must be > 0."""
    if ctx.eps <= 0:
        raise ValueError("the vertical step is only a strict contraction for eps > 0")
    return zmode_heat_factor(ctx.eps) * apply_heat(ctx.e2pig * compose_inverse(h3, ctx), ctx.eps)


# ---------------------------------------------------------------------------
# eigenvector completion
# ---------------------------------------------------------------------------

def _resolvent_fixed_point(apply_j, r: np.ndarray, lam: complex, tol: float, max_iter: int):
    """Solve (lam - J) x = r by the contraction x <- (r + J x) / lam.

    Converges geometrically at rate |J| / |lam|; returns (x, relative
    residual, iterations).
    """
    norm_r = l2_norm(r)
    if norm_r == 0.0:
        return np.zeros_like(r), 0.0, 0
    x = r / lam
    for it in range(1, max_iter + 1):
        jx = apply_j(x)
        x_new = (r + jx) / lam
        res = l2_norm(lam * x_new - apply_j(x_new) - r) / norm_r
        x = x_new
        if res < tol:
            return x, res, it
    raise RuntimeError(f"vertical completion did not converge in {max_iter} iterations (residual {res:.3e})")


def solve_vertical_component(
    h_eig: np.ndarray, lam: complex, ctx: OperatorContext,
    tol: float = 1e-10, max_iter: int = 10_000,
) -> np.ndarray:
    """Complete a planar eigenvector (eigenvalue lam of the z-damped planar
    period) into a full eigenvector of the 3d pulsed period.

    Solves (lam - J) h3 = r with J the vertical step and r the heated,
    phase-multiplied shear coupling; requires |lam| > exp(-4 pi^2 eps).
    """
    zfac = zmode_heat_factor(ctx.eps)
    if abs(lam) <= zfac:
        raise ValueError("|lam| must exceed the vertical contraction factor")
    r = zfac * apply_heat(ctx.e2pig * shear_coupling(h_eig, ctx), ctx.eps)
    h3, res, _ = _resolvent_fixed_point(lambda v: vertical_step(v, ctx), r, lam, tol, max_iter)
    return h3
