"""Admissible stable segments, strip subdivision, preimages, and line quadrature.

A leaf is a straight segment on the torus whose unit tangent lies in the
stable cone with positive second component, parameterized by base point,
direction and length S in (0, 1].  A perfectly vertical leaf of length one
is canonically based on the circle y = 0.  Leaves are the probes of the
anisotropic norms: fields are integrated along them against test functions
that are trigonometric polynomials of the arclength parameter (period one),
whose norms are certified from coefficient sums, never from sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .map_core import (
    RegionId,
    backward_region,
    branch_matrix_inverse,
    check_alpha,
    in_stable_cone,
    mod1,
)

_VERTICAL_TOL = 1e-14


@dataclass(frozen=True)
class Leaf:
    """Admissible stable segment: gamma(t) = base + t * dir (mod 1), t in [0, S]."""

    base: tuple[float, float]
    dir: tuple[float, float]
    length: float

    def __post_init__(self):
        dx, dy = self.dir
        norm = np.hypot(dx, dy)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError("leaf direction must be a unit vector")
        if dy <= 0.0:
            raise ValueError("leaf direction must have positive second component")
        if not 0.0 < self.length <= 1.0 + 1e-12:
            raise ValueError(f"leaf length must lie in (0, 1], got {self.length}")
        bx, by = self.base
        object.__setattr__(self, "base", (mod1(bx), mod1(by)))
        # canonical convention: a vertical leaf of full length is based at y = 0
        if abs(dx) < _VERTICAL_TOL and abs(self.length - 1.0) < 1e-12:
            object.__setattr__(self, "base", (mod1(bx), 0.0))

    def points(self, ts: np.ndarray) -> np.ndarray:
        """Positions at parameters ts, shape (len(ts), 2), reduced mod 1."""
        ts = np.asarray(ts, dtype=float)
        pts = np.empty((ts.size, 2))
        pts[:, 0] = self.base[0] + ts * self.dir[0]
        pts[:, 1] = self.base[1] + ts * self.dir[1]
        return pts % 1.0

    def endpoint(self) -> tuple[float, float]:
        return (mod1(self.base[0] + self.length * self.dir[0]),
                mod1(self.base[1] + self.length * self.dir[1]))


def make_leaf(base, direction, length: float, alpha: int) -> Leaf:
    """Validated constructor: direction must lie in the stable cone for alpha."""
    d = np.asarray(direction, dtype=float)
    d = d / np.hypot(d[0], d[1])
    if d[1] < 0:
        d = -d
    if not in_stable_cone(d, alpha):
        raise ValueError("leaf direction outside the stable cone")
    return Leaf(base=(float(base[0]), float(base[1])), dir=(float(d[0]), float(d[1])), length=float(length))


def leaf_distance(w1: Leaf, w2: Leaf) -> float:
    """Toroidal base distance plus direction and length mismatches."""
    dx = abs(w1.base[0] - w2.base[0])
    dy = abs(w1.base[1] - w2.base[1])
    dx = min(dx, 1.0 - dx)
    dy = min(dy, 1.0 - dy)
    dbase = float(np.hypot(dx, dy))
    ddir = float(np.hypot(w1.dir[0] - w2.dir[0], w1.dir[1] - w2.dir[1]))
    return dbase + ddir + abs(w1.length - w2.length)


def leaf_from_endpoints(p0, p1, alpha: int) -> Leaf:
    """Recover the canonical (base, dir, length) from an endpoint pair.

    The admissible segment between two torus points is unique once the
    tangent must lie in the stable cone with length <= 1: the y-increment
    lifts into (0, 1] and the x-increment into [-1/2, 1/2).
    """
    dy = (p1[1] - p0[1]) % 1.0
    if dy == 0.0:
        dy = 1.0  # vertical wrap-around segment
    dx = (p1[0] - p0[0] + 0.5) % 1.0 - 0.5
    length = float(np.hypot(dx, dy))
    d = (dx / length, dy / length)
    return make_leaf(p0, d, length, alpha)


# ---------------------------------------------------------------------------
# test functions along leaves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestFn:
    """Trigonometric profile of the arclength parameter: sum over modes m of
    cos_coeffs[m] cos(2 pi m t) + sin_coeffs[m] sin(2 pi m t), coefficients
    complex, restricted to t in [0, S].

    Norm accessors return certified upper bounds computed from coefficient
    sums; they are exact enough to be used as the normalization (the class
    constraint is "certified norm <= bound", so estimators stay lower bounds
    of the true sups).
    """

    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray

    def eval(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        m = np.arange(self.cos_coeffs.size)
        ang = 2.0 * np.pi * np.outer(ts, m)
        return np.cos(ang) @ self.cos_coeffs + np.sin(ang) @ self.sin_coeffs

    def _mode_weights(self) -> tuple[np.ndarray, np.ndarray]:
        m = np.arange(self.cos_coeffs.size, dtype=float)
        mags = np.abs(self.cos_coeffs) + np.abs(self.sin_coeffs)
        return m, mags

    def sup_bound(self) -> float:
        _, mags = self._mode_weights()
        return float(np.sum(mags))

    def lip_bound(self) -> float:
        m, mags = self._mode_weights()
        return float(np.sum(2.0 * np.pi * m * mags))

    def c1_norm(self) -> float:
        return self.sup_bound() + self.lip_bound()

    def cq_norm(self, q: float) -> float:
        """sup bound plus Hoelder-q seminorm bound 2^(1-q) (2 pi m)^q per mode."""
        m, mags = self._mode_weights()
        holder = np.where(m > 0, 2.0 ** (1.0 - q) * (2.0 * np.pi * m) ** q, 0.0)
        return float(np.sum(mags) + np.sum(mags * holder))

    def scaled(self, factor: complex) -> "TestFn":
        return TestFn(self.cos_coeffs * factor, self.sin_coeffs * factor)

    def plus(self, other: "TestFn") -> "TestFn":
        n = max(self.cos_coeffs.size, other.cos_coeffs.size)
        cc = np.zeros(n, dtype=complex)
        ss = np.zeros(n, dtype=complex)
        cc[: self.cos_coeffs.size] += self.cos_coeffs
        ss[: self.sin_coeffs.size] += self.sin_coeffs
        cc[: other.cos_coeffs.size] += other.cos_coeffs
        ss[: other.sin_coeffs.size] += other.sin_coeffs
        return TestFn(cc, ss)


def constant_testfn(value: complex = 1.0) -> TestFn:
    return TestFn(np.array([value], dtype=complex), np.array([0.0], dtype=complex))


# ---------------------------------------------------------------------------
# seeded sampling
# ---------------------------------------------------------------------------

def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def sample_leaf(seed, alpha: int) -> Leaf:
    """Deterministic leaf draw: uniform base, slope uniform in the stable cone,
    length from a mixture favoring dyadic values and the strip width 2/alpha."""
    check_alpha(alpha)
    rng = _rng(seed)
    base = rng.random(2)
    slope = rng.uniform(-2.0 / alpha, 2.0 / alpha)
    d = np.array([slope, 1.0])
    d /= np.hypot(d[0], d[1])
    u = rng.random()
    if u < 0.5:
        length = 2.0 ** (-rng.integers(0, 7))
    elif u < 0.75:
        length = min(1.0, (2.0 / alpha) * (0.5 + rng.random()))
    else:
        length = rng.uniform(0.05, 1.0)
    return make_leaf(base, d, length, alpha)


def sample_testfn(seed, w: Leaf, normalize, n_modes: int = 4, q: float = 0.5, sigma: float = 0.4) -> TestFn:
    """Deterministic test-function draw, rescaled so the certified norm hits the
    class boundary: normalize="c1" gives certified C1 norm exactly 1;
    normalize="strong" gives certified C^q norm exactly |W|^-sigma."""
    rng = _rng(seed)
    cc = rng.standard_normal(n_modes + 1) + 1j * rng.standard_normal(n_modes + 1)
    ss = rng.standard_normal(n_modes + 1) + 1j * rng.standard_normal(n_modes + 1)
    ss[0] = 0.0
    decay = (1.0 + np.arange(n_modes + 1)) ** -1.0
    raw = TestFn(cc * decay, ss * decay)
    if normalize == "c1":
        return raw.scaled(1.0 / raw.c1_norm())
    if normalize == "strong":
        return raw.scaled(w.length ** (-sigma) / raw.cq_norm(q))
    raise ValueError("normalize must be 'c1' or 'strong'")


# ---------------------------------------------------------------------------
# strip subdivision and preimages
# ---------------------------------------------------------------------------

def _level_crossings(start: float, rate: float, t_end: float) -> list[float]:
    """Interior parameters where start + t * rate crosses the half-integer grid."""
    if rate == 0.0:
        return []
    lo, hi = sorted((start, start + rate * t_end))
    first = np.ceil(lo * 2.0) / 2.0
    levels = np.arange(first, hi, 0.5)
    ts = (levels - start) / rate
    return [float(t) for t in ts if 1e-13 < t < t_end - 1e-13]


def subdivide_by_strips(w: Leaf, alpha: int) -> list[tuple[Leaf, RegionId]]:
    """Cut a leaf at every backward-region boundary it crosses.

    Boundaries are y in {0, 1/2} and, within the y-half containing the piece,
    x -+ alpha y in {0, 1/2} mod 1.  Pieces are consecutive parameter
    intervals whose union is the leaf; each lies in the closure of a single
    backward region, identified at the piece midpoint.
    """
    check_alpha(alpha)
    bx, by = w.base
    vx, vy = w.dir
    cuts = {0.0, w.length}
    y_cuts = _level_crossings(by, vy, w.length)
    cuts.update(y_cuts)
    # within each y-piece, cut along the relevant strip family
    y_bounds = sorted({0.0, w.length, *y_cuts})
    for t0, t1 in zip(y_bounds[:-1], y_bounds[1:]):
        tm = 0.5 * (t0 + t1)
        upper = mod1(by + tm * vy) >= 0.5
        sgn = -1.0 if upper else 1.0  # upper half uses x - alpha y, lower x + alpha y
        start = (bx + t0 * vx) + sgn * alpha * (by + t0 * vy)
        rate = vx + sgn * alpha * vy
        cuts.update(t0 + t for t in _level_crossings(start, rate, t1 - t0))
    ts = sorted(cuts)
    merged = [ts[0]]
    for t in ts[1:]:
        if t - merged[-1] > 1e-12:
            merged.append(t)
    if merged[-1] < w.length:
        merged[-1] = w.length
    pieces = []
    for t0, t1 in zip(merged[:-1], merged[1:]):
        tm = 0.5 * (t0 + t1)
        mid = (mod1(bx + tm * vx), mod1(by + tm * vy))
        region = backward_region(mid, alpha)
        piece = Leaf(base=(bx + t0 * vx, by + t0 * vy), dir=w.dir, length=t1 - t0)
        pieces.append((piece, region))
    return pieces


@dataclass(frozen=True)
class PreimagePiece:
    """One admissible segment of the inverse image of a leaf piece, with the
    bookkeeping needed to pull test functions back:  the parent parameter is
    t(s) = t_start + t_scale * s (t_scale signed when the inverse flips the
    orientation), and jac = |t_scale| is the constant leaf Jacobian."""

    leaf: Leaf
    region: RegionId
    t_start: float
    t_scale: float


def preimage_pieces(w: Leaf, alpha: int) -> list[PreimagePiece]:
    check_alpha(alpha)
    out: list[PreimagePiece] = []
    offset = 0.0
    for piece, region in subdivide_by_strips(w, alpha):
        ainv = branch_matrix_inverse(alpha, region.index).astype(float)
        v = ainv @ np.asarray(piece.dir)
        speed = float(np.hypot(v[0], v[1]))  # expansion factor, >= alpha^2 / 2
        total = speed * piece.length
        q0 = ainv @ np.asarray(piece.base)
        flipped = v[1] < 0
        if flipped:
            tangent = -v / speed
            origin = q0 + v * piece.length  # far end becomes the base
        else:
            tangent = v / speed
            origin = q0
        n_sub = int(np.ceil(total - 1e-12))
        for k in range(max(n_sub, 1)):
            s0 = min(k * 1.0, total)
            s1 = min(s0 + 1.0, total)
            if s1 - s0 < 1e-13:
                continue
            sub = Leaf(
                base=(origin[0] + s0 * tangent[0], origin[1] + s0 * tangent[1]),
                dir=(float(tangent[0]), float(tangent[1])),
                length=s1 - s0,
            )
            if flipped:
                t_start = offset + piece.length - s0 / speed
                t_scale = -1.0 / speed
            else:
                t_start = offset + s0 / speed
                t_scale = 1.0 / speed
            out.append(PreimagePiece(leaf=sub, region=region, t_start=t_start, t_scale=t_scale))
        offset += piece.length
    return out


def preimage_decompose(w: Leaf, alpha: int) -> list[Leaf]:
    """Admissible decomposition of the inverse image of a leaf."""
    return [p.leaf for p in preimage_pieces(w, alpha)]


# ---------------------------------------------------------------------------
# quadrature along leaves
# ---------------------------------------------------------------------------

def _bilinear(f: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Periodic bilinear interpolation of grid field(s) at points (m, 2)."""
    f = np.asarray(f)
    n = f.shape[-1]
    x = pts[:, 0] * n
    y = pts[:, 1] * n
    i0 = np.floor(x).astype(int) % n
    j0 = np.floor(y).astype(int) % n
    fx = x - np.floor(x)
    fy = y - np.floor(y)
    i1 = (i0 + 1) % n
    j1 = (j0 + 1) % n
    w00 = (1 - fx) * (1 - fy)
    w10 = fx * (1 - fy)
    w01 = (1 - fx) * fy
    w11 = fx * fy
    return (f[..., i0, j0] * w00 + f[..., i1, j0] * w10
            + f[..., i0, j1] * w01 + f[..., i1, j1] * w11)


def leaf_nodes(w: Leaf, n_grid: int) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid nodes and weights with step min(1/(8 n_grid), |W|/64)."""
    step = min(1.0 / (8.0 * n_grid), w.length / 64.0)
    m = max(int(np.ceil(w.length / step)), 2)
    ts = np.linspace(0.0, w.length, m + 1)
    wts = np.full(m + 1, w.length / m)
    wts[0] *= 0.5
    wts[-1] *= 0.5
    return ts, wts


def leaf_integrate(f: np.ndarray, w: Leaf, phi: TestFn) -> np.ndarray | complex:
    """Integral along the leaf of f times the test profile, by composite
    trapezoid with bilinear field interpolation.  Returns a complex pair for
    planar fields and a complex scalar for scalar fields."""
    ts, wts = leaf_nodes(w, f.shape[-1])
    vals = _bilinear(f, w.points(ts))
    pv = phi.eval(ts)
    out = np.sum(vals * pv * wts, axis=-1)
    return out if out.ndim else complex(out)
