"""Acceptance gate: every criterion runs at its stated tolerance and prints
one PASS line with the measured margin."""

import time

import numpy as np

from conftest import random_interior_rho, random_mixture
from msms import diagnostics, stepper
from msms.mixture import MixtureSpec, composition_from_rho, rescaled_k, rescaled_k_many
from msms.msalgebra import build_A, build_C, flux_equivalence_check, mobility_many
from msms.statemap import (
    EntropyVars,
    invert_states,
    jacobian_rho,
    rho_from_x,
    w_from_rho,
    x_from_w,
)


def test_criterion_1_flux_formulation_equivalence():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 5))
        spec = random_mixture(rng, n=n)
        comp = composition_from_rho(spec, random_interior_rho(rng, n))
        k = rescaled_k(spec, comp.c_tot)
        res = flux_equivalence_check(
            comp, k, rng.normal(0, 2, n - 1), float(rng.normal(0, 2)), spec
        )
        worst = max(worst, res)
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-10
    assert elapsed < 1.0
    print(
        f"PASS criterion 1: flux equivalence, worst residual {worst:.3e} "
        f"(tol 1e-10), {elapsed:.2f}s"
    )


def test_criterion_2_inversion_round_trips():
    rng = np.random.default_rng(102)
    t0 = time.perf_counter()
    worst_w = worst_x = worst_closed = 0.0
    n_states = 0
    for _ in range(20):
        n = int(rng.integers(2, 5))
        spec = random_mixture(rng, n=n)
        P = 500
        n_states += P
        w = rng.uniform(-2, 2, (n - 1, P))
        phi = rng.uniform(-2, 2, P)
        x, rho, c_tot = invert_states(w, phi, spec)
        logs = np.log(x) / spec.M[:, None]
        w_back = logs[: n - 1] - logs[n - 1] + spec.phi_coupling[:, None] * phi
        worst_w = max(worst_w, np.abs(w_back - w).max())

        x_rand = (rng.dirichlet(np.ones(n), P) * 0.9 + 0.1 / n).T
        c2 = 1.0 / (spec.M @ x_rand)
        rho2 = c2 * spec.M[:, None] * x_rand
        x_back = rho2 / (c2 * spec.M[:, None])
        worst_x = max(worst_x, np.abs(x_back - x_rand).max())

    # equal molar masses: the fixed-point route must match the explicit form
    for _ in range(5):
        n = int(rng.integers(2, 5))
        M0 = float(rng.uniform(0.5, 3.0))
        spec = random_mixture(rng, n=n)
        spec = MixtureSpec(n=n, M=np.full(n, M0), z=spec.z, Dms=spec.Dms)
        P = 200
        w = rng.uniform(-2, 2, (n - 1, P))
        phi = rng.uniform(-2, 2, P)
        x, _, _ = invert_states(w, phi, spec)
        expo = np.exp(M0 * w - (spec.z[: n - 1] - spec.z[n - 1])[:, None] * phi)
        closed = expo / (1.0 + expo.sum(axis=0))
        worst_closed = max(worst_closed, np.abs(x[: n - 1] - closed).max())
    elapsed = time.perf_counter() - t0

    # spot-check the scalar operations against the vectorized bulk
    spec = random_mixture(rng, n=3)
    for _ in range(50):
        ev = EntropyVars(w=rng.uniform(-2, 2, 2), phi=float(rng.uniform(-2, 2)))
        x1 = x_from_w(ev, spec)
        comp = rho_from_x(x1, spec)
        assert np.abs(w_from_rho(comp, ev.phi, 0.0, spec) - ev.w).max() <= 1e-10

    assert worst_w <= 1e-10
    assert worst_x <= 1e-13
    assert worst_closed <= 1e-12
    assert elapsed < 1.0
    print(
        f"PASS criterion 2: round trips on {n_states} states, "
        f"w-trip {worst_w:.2e} (1e-10), x-trip {worst_x:.2e} (1e-13), "
        f"closed form {worst_closed:.2e} (1e-12), {elapsed:.2f}s"
    )


def test_criterion_3_jacobian_against_finite_differences():
    rng = np.random.default_rng(103)
    step = 1e-6
    worst = 0.0
    for _ in range(1000):
        spec = random_mixture(rng)
        m = spec.n - 1
        ev = EntropyVars(w=rng.uniform(-2, 2, m), phi=float(rng.uniform(-2, 2)))
        J = jacobian_rho(ev, spec)

        def rho_prime(w, phi):
            _, rho, _ = invert_states(
                np.asarray(w, float)[:, None], np.array([phi]), spec
            )
            return rho[:m, 0]

        J_fd = np.zeros_like(J)
        for j in range(m):
            wp, wm = ev.w.copy(), ev.w.copy()
            wp[j] += step
            wm[j] -= step
            J_fd[:, j] = (rho_prime(wp, ev.phi) - rho_prime(wm, ev.phi)) / (2 * step)
        J_fd[:, m] = (
            rho_prime(ev.w, ev.phi + step) - rho_prime(ev.w, ev.phi - step)
        ) / (2 * step)
        rel = np.abs(J - J_fd).max() / max(np.abs(J).max(), 1e-12)
        worst = max(worst, rel)
    assert worst <= 1e-6
    print(f"PASS criterion 3: jacobian vs central differences, worst {worst:.3e} (tol 1e-6)")


def test_criterion_4_structural_invariants_on_example1(ex1_result):
    scen, traj = ex1_result
    reports = traj.reports
    assert len(reports) == 17000
    assert all(r.converged for r in reports)

    rho_min = min(r.rho_min for r in reports)
    rho_max = max(r.rho_max for r in reports)
    assert 0.0 < rho_min and rho_max < 1.0

    sum_dev = max(r.rho_sum_dev for r in reports)
    assert sum_dev <= 1e-12

    m0 = diagnostics.masses(scen.grid, stepper.init_state(scen))
    drift = max(np.abs(r.masses - m0).max() for r in reports)
    assert drift <= 1e-6

    resid = max(r.entropy_residual for r in reports)
    assert resid <= 1e-8

    lift = stepper.build_lift(scen)
    H = [diagnostics.entropy(scen.grid, stepper.init_state(scen, lift), lift, scen.spec)]
    H += [r.H for r in reports]
    rise = max(b - a for a, b in zip(H, H[1:]))
    assert rise <= 1e-8  # entropy nonincreasing along the trajectory
    print(
        f"PASS criterion 4: example-1 invariants, rho in ({rho_min:.2e}, {rho_max:.6f}), "
        f"sum dev {sum_dev:.1e} (1e-12), mass drift {drift:.1e} (1e-6), "
        f"entropy residual max {resid:.1e} (1e-8), max entropy rise {rise:.1e}"
    )


def test_criterion_5_example1_long_time_behavior(ex1_result):
    scen, traj = ex1_result
    final = traj.final
    asym = np.abs(final.rho - final.rho[:, ::-1]).max()
    rate = traj.reports[-1].rho_step_inf / scen.params.tau
    assert asym <= 1e-3
    assert rate <= 1e-4
    print(
        f"PASS criterion 5: example-1 at t=17, mirror asymmetry {asym:.2e} (1e-3), "
        f"stationarity rate {rate:.2e} (1e-4)"
    )


def test_criterion_6_exponential_relative_entropy_decay(ex2_result):
    scen, traj, reached = ex2_result
    assert reached, "steady state hunt did not reach its stationarity tolerance"
    ts = [r.t for r in traj.reports]
    hs = [r.H_rel for r in traj.reports]
    assert all(h is not None for h in hs)
    slope, r2 = diagnostics.semilog_fit(ts, hs, (1.0, 4.0))
    assert slope < 0.0
    assert r2 >= 0.99
    print(
        f"PASS criterion 6: example-2 relative entropy decays exponentially, "
        f"rate {-slope:.3f}, R^2 {r2:.5f} (>= 0.99)"
    )


def test_criterion_7_example5_constant_steady_state(ex5_results):
    scen, traj = ex5_results[1.0]
    final = traj.final
    dev2 = np.abs(final.rho[1] - 0.2).max()
    dev1 = np.abs(final.rho[0] - 0.350005).max()
    variation = np.abs(final.rho.max(axis=1) - final.rho.min(axis=1)).max()
    assert dev2 <= 1e-3
    assert dev1 <= 1e-3
    assert variation <= 1e-3
    print(
        f"PASS criterion 7: example-5 steady state, |rho_2-0.2| {dev2:.2e}, "
        f"|rho_1-0.350005| {dev1:.2e}, spatial variation {variation:.2e} (all 1e-3)"
    )


def test_criterion_8_second_order_spatial_convergence(convergence_result):
    fits = convergence_result["fits"]
    for field, fit in fits.items():
        assert fit >= 1.8, f"{field}: least-squares rate {fit:.3f} < 1.8"
    pretty = ", ".join(f"{f}={v:.2f}" for f, v in fits.items())
    print(f"PASS criterion 8: spatial convergence rates {pretty} (all >= 1.8)")


def test_criterion_9_matrix_algebra_properties():
    rng = np.random.default_rng(109)
    worst_colsum = 0.0
    worst_bsym = 0.0
    samples = 0
    for n in (2, 3, 4):
        spec = random_mixture(rng, n=n)
        P = 3334
        samples += P
        rho = (rng.dirichlet(np.ones(n), P) * 0.9 + 0.1 / n).T  # (n, P)
        c = (rho / spec.M[:, None]).sum(axis=0)
        k = rescaled_k_many(spec, c)

        B = mobility_many(rho.T, c, k)
        v = rng.normal(0, 1, (P, n - 1))
        quad = np.einsum("pi,pij,pj->p", v, B, v)
        assert np.all(quad > 0.0)
        sym = np.linalg.norm(B - np.transpose(B, (0, 2, 1)), axis=(1, 2))
        norm = np.linalg.norm(B, axis=(1, 2))
        worst_bsym = max(worst_bsym, float((sym / norm).max()))

        for p in range(0, P, 16):
            A = build_A(rho[:, p], k[p])
            resid = np.abs(A.T @ np.ones(n)).max()
            scale = max(1.0, np.abs(A).max())
            worst_colsum = max(worst_colsum, resid / scale)
            if n == 2:
                assert resid == 0.0
            C = build_C(rho[:, p], k[p])
            np.testing.assert_allclose(C, C.T, rtol=1e-9, atol=1e-12)
            w = rng.normal(0, 1, n - 1)
            assert w @ C @ w > 0.0

    # the column-sum identity cancels to the last representable bit
    assert worst_colsum <= 2.0**-51
    assert worst_bsym <= 1e-8
    print(
        f"PASS criterion 9: matrix properties on {samples} states, "
        f"|A^T 1| <= {worst_colsum:.1e} (one ulp), B asymmetry {worst_bsym:.1e} (1e-8)"
    )
