"""Acceptance criteria, one test per criterion, each printing a pass/fail line.

Tolerances are pinned here, not recalibrated.  Where a criterion leaves a
parameter open (sample counts, which diffusivity hosts a control run), the
concrete pinned choice is stated in the test docstring.  Run with
``pytest tests/test_acceptance.py -v -s`` to see the per-criterion lines.
"""

import time

import numpy as np

from dynamolab import map_core as mc
from dynamolab.fields import (
    Field3,
    l2_norm,
    random_div_free,
    random_field,
    relative_divergence,
)
from dynamolab.norms import (
    NormParams,
    heat_continuity_check,
    lasota_yorke_check,
    norm_report,
    strong_stable_est,
    strong_unstable_est,
)
from dynamolab.operators import (
    limit_pushforward,
    make_context,
    pulsed_step_3d,
    solve_vertical_component,
    zmode_heat_factor,
)
from dynamolab.shear import build_shear, limit_matrix, quadrant_integrals, zero_shear
from dynamolab.spectral import (
    evolve_and_trace,
    flux_experiment,
    leading_eigenvalue,
    limit_convergence,
)

PROFILE = build_shear(0.02, 128)

# frozen by the pre-registered calibration run (alpha in {8,16,32}, field
# seeds {1,2}, 128 leaves): largest required constant was 0.28
C_CAL = 2.0


def _report(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f"  ({detail})" if detail else ""))


def test_criterion_1_exact_map_algebra():
    t0 = time.time()
    for alpha in (2, 4, 8, 16, 32):
        for idx in (1, 2, 3, 4):
            a = mc.branch_matrix(alpha, idx)
            assert a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0] == 1
    for n in (4, 8, 64, 256):
        for alpha in (2, 4, 8, 16):
            assert mc.pullback_is_bijection(mc.grid_pullback_table(n, alpha))
    rng = np.random.default_rng(2024)
    alpha = 8
    checked = skipped = 0
    margin = 1e-6
    for _ in range(10_000):
        x, y = rng.random(2)
        near = min(abs(x - 0.5), x,
                   abs(mc.mod1(y + alpha * x) - 0.5), mc.mod1(y + alpha * x),
                   abs(mc.mod1(y - alpha * x) - 0.5), mc.mod1(y - alpha * x))
        shear = mc.apply_map((x, y), alpha)
        fl = mc.flow_map(1.0, (x, y, 0.0), alpha)
        dxf = mc.mod1(fl[0] - shear[0] + 0.5) - 0.5
        dyf = mc.mod1(fl[1] - shear[1] + 0.5) - 0.5
        assert np.hypot(dxf, dyf) < 1e-12
        if near <= margin:
            skipped += 1
            continue
        a = mc.branch_matrix(alpha, mc.forward_region((x, y), alpha).index)
        lin = (mc.mod1(a[0, 0] * x + a[0, 1] * y), mc.mod1(a[1, 0] * x + a[1, 1] * y))
        dx = mc.mod1(shear[0] - lin[0] + 0.5) - 0.5
        dy = mc.mod1(shear[1] - lin[1] + 0.5) - 0.5
        assert np.hypot(dx, dy) < 1e-12
        checked += 1
    dt = time.time() - t0
    assert dt < 30.0
    _report("criterion 1: exact map algebra",
            True, f"{checked} points, {skipped} within boundary margin, {dt:.1f}s")


def test_criterion_2_limit_spectrum():
    t0 = time.time()
    quad = quadrant_integrals(build_shear(0.0, 128), 512)
    assert np.max(np.abs(quad.values - np.array([0.25, -0.25, 0.25, -0.25]))) < 1e-4
    lm0 = limit_matrix(build_shear(0.0, 128), 512)
    assert abs(lm0.mu - 1.0) < 1e-4
    lm = limit_matrix(PROFILE, 512)
    assert abs(lm.mu) >= 0.5
    for m in (lm0, lm):
        assert abs(np.trace(m.entries) - m.mu) < 1e-10
        assert abs(np.linalg.det(m.entries)) < 1e-10
    dt = time.time() - t0
    assert dt < 10.0
    _report("criterion 2: limit spectrum",
            True, f"mu(step)={lm0.mu:.6f}, |mu(0.02)|={abs(lm.mu):.4f}, {dt:.1f}s")


def test_criterion_3_rank_one_limit_is_nilpotent():
    t0 = time.time()
    worst = 0.0
    for seed in range(100):
        h = random_field(seed, 64, band=8)
        twice = limit_pushforward(limit_pushforward(h))
        worst = max(worst, l2_norm(twice))
    assert worst < 1e-12
    dt = time.time() - t0
    assert dt < 5.0
    _report("criterion 3: squared limit operator vanishes",
            True, f"max |L^2 h| = {worst:.2e}, {dt:.1f}s")


def test_criterion_4_fast_dynamo_eigenvalue_threshold():
    """Plateau reading: the ratio-vs-limit comparison at alpha = 32 applies on
    the eps-plateau (1e-3, 1e-4); at eps = 1e-2 the heat step still shifts the
    eigenvalue and only the alpha^2/8 threshold is asserted."""
    t0 = time.time()
    mu_abs = abs(limit_matrix(PROFILE).mu)
    lines = []
    for alpha in (16, 32):
        for eps in (1e-2, 1e-3, 1e-4):
            rep = leading_eigenvalue(make_context(alpha, 256, PROFILE, eps), seed=1)
            assert rep.converged and rep.residual < 1e-8
            lam_damped = abs(rep.eigenvalue) * zmode_heat_factor(eps)
            assert lam_damped >= alpha**2 / 8.0
            ratio = abs(rep.eigenvalue) / alpha**2
            lines.append(f"a={alpha} eps={eps:g}: ratio={ratio:.3f}")
            if alpha == 32 and eps <= 1e-3:
                assert abs(ratio - mu_abs) <= 0.2 * mu_abs
    dt = time.time() - t0
    assert dt < 600.0
    _report("criterion 4: fast-dynamo eigenvalue threshold",
            True, "; ".join(lines) + f"; |mu|={mu_abs:.3f}, {dt:.1f}s")


def test_criterion_5_uniform_growth():
    t0 = time.time()
    alpha = 16
    threshold = 0.5 * np.log(alpha**2 / 8.0) / 2.0
    gammas = []
    for eps in (1e-2, 1e-3, 1e-4):
        ctx = make_context(alpha, 256, PROFILE, eps)
        tr = evolve_and_trace(random_div_free(5, 256, band=16), ctx, 40)
        gammas.append(tr.gamma)
        assert tr.gamma >= threshold
    dt = time.time() - t0
    assert dt < 300.0
    _report("criterion 5: uniform-in-eps growth",
            True, f"gammas={['%.2f' % g for g in gammas]} >= {threshold:.3f}, {dt:.1f}s")


def test_criterion_6_anti_dynamo_control():
    """Pinned at eps = 1e-2 (the diffusive scale the grid resolves; at smaller
    eps the lattice's ideal junk modes outlive 40 periods)."""
    t0 = time.time()
    gammas = []
    for alpha in (8, 16):
        ctx = make_context(alpha, 256, zero_shear(), 1e-2)
        tr = evolve_and_trace(random_div_free(6, 256, band=16), ctx, 40)
        gammas.append(tr.gamma)
        assert tr.gamma < 0.0
    dt = time.time() - t0
    assert dt < 120.0
    _report("criterion 6: anti-dynamo control",
            True, f"gammas={['%.3f' % g for g in gammas]} < 0, {dt:.1f}s")


def test_criterion_7_strong_chaos_convergence():
    t0 = time.time()
    n = 1024
    h = random_field(21, n, band=8)  # pre-registered draw
    phi = random_field(22, n, band=8)
    rows = limit_convergence([8, 16, 32, 64], h, phi, PROFILE)
    gaps = [r["pairing_gap"] for r in rows]
    for a, b in zip(gaps, gaps[1:]):
        assert b < a
    assert gaps[0] / gaps[-1] >= 4.0
    dt = time.time() - t0
    assert dt < 180.0
    _report("criterion 7: strong-chaos convergence",
            True, f"gaps={['%.2e' % g for g in gaps]}, total {gaps[0]/gaps[-1]:.1f}x, {dt:.1f}s")


def test_criterion_8_norm_and_transfer_inequalities():
    """Sample counts pinned at 256 leaves x 8 profiles (the criterion leaves
    counts open; trends were stable from 128 leaves up)."""
    t0 = time.time()
    params = NormParams(n_leaves=256, n_testfns=8)
    # cross-norm ordering on shared samples
    h = random_field(1, 256, band=8)
    rep = norm_report(h, 16, params, seed=100)
    assert rep.weak <= 3.0 * rep.strong_stable + 1e-12
    # indicator-field trends
    ind = np.zeros((2, 512, 512), dtype=complex)
    ind[0] = np.where(np.arange(512)[None, :] >= 256, 1.0, 0.0)
    stables, unstables = [], []
    for alpha in (8, 16, 32):
        stables.append(strong_stable_est(ind, alpha, params, seed=3))
        unstables.append(strong_unstable_est(ind, alpha, params, seed=3))
    assert max(stables) <= 2.0  # uniformly bounded
    assert unstables[0] > unstables[1] > unstables[2] > 0.0
    for alpha, u in zip((8, 16, 32), unstables):
        assert u <= 0.2 * alpha ** (params.beta - 1.0)
    # transfer-operator margins with the frozen constant on registered seeds
    for alpha in (8, 16, 32):
        ctx = make_context(alpha, 256, PROFILE, 0.0)
        ly = lasota_yorke_check(h, ctx, params, C_CAL, seed=100)
        assert ly.all_passed, f"alpha={alpha}:\n{ly}"
    # heat continuity at beta = 0.2
    f = random_field(9, 256, band=8)
    for eps in (1e-3, 1e-4):
        hc = heat_continuity_check(f, eps, 16, params, seed=55)
        assert hc.all_passed, f"eps={eps}:\n{hc}"
    dt = time.time() - t0
    assert dt < 480.0
    _report("criterion 8: norm and transfer inequalities",
            True, f"stable(ind)={stables[0]:.2f} (uniform), "
                  f"unstable(ind)={['%.4f' % u for u in unstables]}, {dt:.0f}s")


def test_criterion_9_perfect_dynamo_flux():
    t0 = time.time()
    alpha, n = 16, 256
    rep = leading_eigenvalue(make_context(alpha, n, PROFILE, 1e-4), seed=1)
    assert rep.converged
    log_lam = np.log(abs(rep.eigenvalue) * zmode_heat_factor(1e-4))
    ctx0 = make_context(alpha, n, PROFILE, 0.0)
    series = flux_experiment(random_field(11, n, band=4), random_field(12, n, band=4), ctx0, 30)
    assert series.tail_slope > 0
    rel = abs(series.tail_slope - log_lam) / log_lam
    assert rel <= 0.10
    dt = time.time() - t0
    assert dt < 120.0
    _report("criterion 9: perfect-dynamo flux",
            True, f"tail slope {series.tail_slope:.3f} vs log|lam| {log_lam:.3f} "
                  f"({100*rel:.1f}% off), {dt:.1f}s")


def test_criterion_10_eigenvector_assembly():
    """Faithful implementation of the stated criterion.  The divergence clause
    is expected to fail at desk scale: the advected field of the discrete
    eigenvector carries tangential jumps whose spectral tails alias into the
    resolved band, an O(n^-2) floor (measured ~1e-2 at n=256, ~2.8e-3 at 512,
    independent of alpha and eps within the sweep).  Reaching 1e-6 would need
    n ~ 10^4.  See the growth of the solve residual side, which does pass."""
    t0 = time.time()
    alpha, eps, n = 8, 1e-3, 256
    ctx = make_context(alpha, n, PROFILE, eps)
    rep = leading_eigenvalue(ctx, seed=3)
    lam = rep.eigenvalue * zmode_heat_factor(eps)
    h3 = solve_vertical_component(rep.vector, lam, ctx, tol=1e-10)
    b = Field3(h=rep.vector.copy(), h3=h3)
    out = pulsed_step_3d(b, ctx)
    num = np.sqrt(l2_norm(out.h - lam * b.h) ** 2 + l2_norm(out.h3 - lam * b.h3) ** 2)
    den = abs(lam) * np.sqrt(l2_norm(b.h) ** 2 + l2_norm(b.h3) ** 2)
    solve_residual = num / den
    rel_div = relative_divergence(b)
    dt = time.time() - t0
    ok = solve_residual < 1e-6 and rel_div < 1e-6
    _report("criterion 10: eigenvector assembly", ok,
            f"solve residual {solve_residual:.2e} (<1e-6: {solve_residual < 1e-6}), "
            f"relative divergence {rel_div:.2e} (<1e-6: {rel_div < 1e-6}), {dt:.1f}s")
    assert solve_residual < 1e-6
    assert dt < 120.0
    assert rel_div < 1e-6, (
        f"assembled eigenvector divergence {rel_div:.3e}: the sampled advected "
        "field's tangential jumps alias into the resolved band (measured floor "
        "1.3e-1/1.1e-2/2.8e-3/1.3e-3 at n=128/256/512/1024, ~1/n beyond 512, "
        "alpha- and eps-insensitive), so the stated 1e-6 needs n ~ 1e5"
    )
