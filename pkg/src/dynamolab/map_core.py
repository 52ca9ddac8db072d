"""Piecewise-linear stretch-fold map on the torus and its partition geometry.

The planar map is the composition of a vertical shear (speed 4*alpha*|x-1/2|,
acting for a quarter period) and a horizontal shear (speed 4*alpha*|y-1/2|,
acting for the next quarter); the remaining half period applies an
out-of-plane displacement -2*g(x,y) that never moves the planar coordinates.
Because alpha is an even integer, the displacement alpha*|x-1/2| agrees with
alpha*x modulo 1, the map is continuous on the torus, and on each of four
smoothness regions it acts as an integer matrix of determinant one.

Conventions, used everywhere downstream:
  * circle coordinates live in [0, 1); thresholds use the half-open
    indicator "1 on [a, 1)", so boundary points are classified
    deterministically;
  * lattice computations (grid size n even) use integer arithmetic mod n
    and are bit-exact; real-coordinate helpers use doubles and are meant
    for oracles and property tests away from region boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

FORWARD = "forward"
BACKWARD = "backward"


class RegionId(NamedTuple):
    """One of the four smoothness regions, on the forward or backward side."""

    side: str
    index: int


def check_alpha(alpha: int) -> int:
    """Validate the shear strength: an even integer >= 2."""
    if int(alpha) != alpha or alpha < 2 or alpha % 2 != 0:
        raise ValueError(f"shear strength must be an even integer >= 2, got {alpha}")
    return int(alpha)


def mod1(x: float) -> float:
    """Reduce into [0, 1); guards against the float quirk (-tiny) % 1.0 == 1.0."""
    r = x % 1.0
    return r if r < 1.0 else 0.0


def mod1_arr(x: np.ndarray) -> np.ndarray:
    r = np.asarray(x) % 1.0
    return np.where(r >= 1.0, 0.0, r)


def indicator_geq(x: float, a: float) -> int:
    """Half-open circle indicator: 1 iff x in [a, 1)."""
    return 1 if a <= x < 1.0 else 0


# ---------------------------------------------------------------------------
# branch matrices
# ---------------------------------------------------------------------------

def branch_matrix(alpha: int, index: int) -> np.ndarray:
    """Integer matrix acting on forward region `index` (determinant one)."""
    a = check_alpha(alpha)
    a2 = a * a
    mats = {
        1: [[1 + a2, a], [a, 1]],
        2: [[1 - a2, a], [-a, 1]],
        3: [[1 - a2, -a], [a, 1]],
        4: [[1 + a2, -a], [-a, 1]],
    }
    if index not in mats:
        raise ValueError(f"region index must be 1..4, got {index}")
    return np.array(mats[index], dtype=np.int64)


def branch_matrix_inverse(alpha: int, index: int) -> np.ndarray:
    """Inverse branch matrix; acts on backward region `index`."""
    a = check_alpha(alpha)
    a2 = a * a
    mats = {
        1: [[1, -a], [-a, 1 + a2]],
        2: [[1, -a], [a, 1 - a2]],
        3: [[1, a], [-a, 1 - a2]],
        4: [[1, a], [a, 1 + a2]],
    }
    if index not in mats:
        raise ValueError(f"region index must be 1..4, got {index}")
    return np.array(mats[index], dtype=np.int64)


# ---------------------------------------------------------------------------
# regions and the map
# ---------------------------------------------------------------------------

def forward_region(p: tuple[float, float], alpha: int) -> RegionId:
    """Forward smoothness region of p: x-half plus the sign of the vertical shear."""
    check_alpha(alpha)
    x, y = mod1(p[0]), mod1(p[1])
    if x >= 0.5:
        return RegionId(FORWARD, 1 if mod1(y + alpha * x) >= 0.5 else 3)
    return RegionId(FORWARD, 2 if mod1(y - alpha * x) >= 0.5 else 4)


def backward_region(p: tuple[float, float], alpha: int) -> RegionId:
    """Backward smoothness region: y-half plus the sign of the horizontal shear."""
    check_alpha(alpha)
    x, y = mod1(p[0]), mod1(p[1])
    if y >= 0.5:
        return RegionId(BACKWARD, 1 if mod1(x - alpha * y) >= 0.5 else 2)
    return RegionId(BACKWARD, 3 if mod1(x + alpha * y) >= 0.5 else 4)


def apply_map(p: tuple[float, float], alpha: int) -> tuple[float, float]:
    """Forward map: vertical shear then horizontal shear, both mod 1."""
    check_alpha(alpha)
    x, y = mod1(p[0]), mod1(p[1])
    y1 = mod1(y + alpha * x) if x >= 0.5 else mod1(y - alpha * x)
    x1 = mod1(x + alpha * y1) if y1 >= 0.5 else mod1(x - alpha * y1)
    return (x1, y1)


def apply_inverse(p: tuple[float, float], alpha: int) -> tuple[float, float]:
    """Inverse map: undo the horizontal shear, then the vertical one."""
    check_alpha(alpha)
    x, y = mod1(p[0]), mod1(p[1])
    x1 = mod1(x - alpha * y) if y >= 0.5 else mod1(x + alpha * y)
    y1 = mod1(y - alpha * x1) if x1 >= 0.5 else mod1(y + alpha * x1)
    return (x1, y1)


def flow_map(
    t: float,
    p: tuple[float, float, float],
    alpha: int,
    g: "Callable[[float, float], float] | object" = None,
) -> tuple[float, float, float]:
    """Exact piecewise-affine flow of the pulsed velocity field up to time t <= 1.

    Phases: vertical shear on [0, 1/4), horizontal shear on [1/4, 1/2),
    out-of-plane displacement -2*g at the (then frozen) planar position on
    [1/2, 1).  At t = 1 the planar part equals apply_map and the vertical
    part is z - g(T(x, y)) mod 1.  `g` is a ShearProfile or a callable
    (x, y) -> float; None means g identically zero.
    """
    check_alpha(alpha)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"flow time must lie in [0, 1], got {t}")
    x, y, z = mod1(p[0]), mod1(p[1]), mod1(p[2])

    dt_v = min(t, 0.25)
    y = mod1(y + 4.0 * alpha * abs(x - 0.5) * dt_v)
    if t > 0.25:
        dt_h = min(t, 0.5) - 0.25
        x = mod1(x + 4.0 * alpha * abs(y - 0.5) * dt_h)
    if t > 0.5:
        dt_z = t - 0.5
        if g is None:
            gval = 0.0
        elif callable(g):
            gval = g(x, y)
        else:
            from .shear import shear_values

            gval = float(shear_values(g, np.array([[x, y]]))[0])
        z = mod1(z - 2.0 * gval * dt_z)
    return (x, y, z)


# ---------------------------------------------------------------------------
# cones and leaf Jacobian
# ---------------------------------------------------------------------------

def in_stable_cone(v: np.ndarray, alpha: int) -> bool:
    """|v1| <= (2/alpha) |v2|; the cone contracted by the forward map."""
    check_alpha(alpha)
    v = np.asarray(v, dtype=float)
    if np.all(v == 0.0):
        raise ValueError("cone membership is undefined for the zero vector")
    return abs(v[0]) <= 2.0 / alpha * abs(v[1])


def in_unstable_cone(v: np.ndarray, alpha: int) -> bool:
    """|v2| <= (2/alpha) |v1|; the cone expanded by the forward map."""
    check_alpha(alpha)
    v = np.asarray(v, dtype=float)
    if np.all(v == 0.0):
        raise ValueError("cone membership is undefined for the zero vector")
    return abs(v[1]) <= 2.0 / alpha * abs(v[0])


def leaf_jacobian(direction: np.ndarray, region: RegionId, alpha: int) -> float:
    """Constant contraction factor 1/|A_inv d| of a stable segment in one strip.

    `direction` must be a unit vector in the stable cone and `region` a
    backward region; the value is at most 2/alpha^2.
    """
    check_alpha(alpha)
    if region.side != BACKWARD:
        raise ValueError("leaf_jacobian needs a backward region")
    d = np.asarray(direction, dtype=float)
    if not in_stable_cone(d, alpha):
        raise ValueError("direction outside the stable cone")
    if abs(np.hypot(d[0], d[1]) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    w = branch_matrix_inverse(alpha, region.index) @ d
    return 1.0 / float(np.hypot(w[0], w[1]))


# ---------------------------------------------------------------------------
# exact lattice pullback
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PullbackTable:
    """Exact integer preimage data for every lattice point of an n x n grid.

    src_i/src_j give the lattice coordinates of the inverse-map image of
    each target point, region the backward region index (1..4).  The source
    map is a bijection of the lattice.
    """

    n: int
    alpha: int
    src_i: np.ndarray
    src_j: np.ndarray
    region: np.ndarray


def grid_pullback_table(n: int, alpha: int) -> PullbackTable:
    """Build the exact mod-n pullback table; n must be even so that the
    threshold 1/2 sits on the lattice."""
    check_alpha(alpha)
    if n % 2 != 0 or n <= 0:
        raise ValueError(f"grid size must be a positive even integer, got {n}")
    half = n // 2
    ii, jj = np.meshgrid(np.arange(n, dtype=np.int64), np.arange(n, dtype=np.int64), indexing="ij")

    upper = jj >= half
    wminus = (ii - alpha * jj) % n
    wplus = (ii + alpha * jj) % n
    region = np.where(upper, np.where(wminus >= half, 1, 2), np.where(wplus >= half, 3, 4)).astype(np.int8)

    src_i = np.empty((n, n), dtype=np.int64)
    src_j = np.empty((n, n), dtype=np.int64)
    for idx in (1, 2, 3, 4):
        m = branch_matrix_inverse(alpha, idx)
        mask = region == idx
        src_i[mask] = (m[0, 0] * ii[mask] + m[0, 1] * jj[mask]) % n
        src_j[mask] = (m[1, 0] * ii[mask] + m[1, 1] * jj[mask]) % n
    return PullbackTable(n=n, alpha=alpha, src_i=src_i, src_j=src_j, region=region)


def pullback_is_bijection(table: PullbackTable) -> bool:
    """Check that the source map visits every lattice point exactly once."""
    flat = table.src_i.ravel() * table.n + table.src_j.ravel()
    return bool(np.all(np.sort(flat) == np.arange(table.n * table.n)))
