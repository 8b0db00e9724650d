"""Shared fixtures; the long trajectory runs are session-scoped so the
acceptance tests and the module regressions reuse them."""

import numpy as np
import pytest

from msms import cli, diagnostics, presets, stepper


@pytest.fixture(scope="session")
def ex1_result():
    """Full example-1 trajectory: h=0.01, tau=1e-3, t in [0, 17]."""
    scen = presets.scenario_from_doc(presets.preset("example1"), name="example1")
    traj = stepper.run(scen)
    return scen, traj


@pytest.fixture(scope="session")
def ex2_result():
    """Example-2 trajectory with relative entropy against its steady state."""
    scen = presets.scenario_from_doc(presets.preset("example2"), name="example2")
    steady, reached = stepper.run_to_stationarity(scen, rate_tol=1e-8, t_max=60.0)
    traj = stepper.run(scen, steady=steady)
    return scen, traj, reached


@pytest.fixture(scope="session")
def ex5_results():
    """Field-free runs for molar masses M1 in {1, 2, 6}, with the analytic
    constant steady state as relative-entropy reference."""
    out = {}
    for m1 in (1.0, 2.0, 6.0):
        doc = presets.preset("example5")
        doc["species"]["M"][0] = m1
        scen = presets.scenario_from_doc(doc, name=f"example5-M{m1:g}")
        lift = stepper.build_lift(scen)
        state0 = stepper.init_state(scen, lift)
        steady = stepper.constant_state(
            scen, lift, diagnostics.masses(scen.grid, state0)
        )
        out[m1] = (scen, stepper.run(scen, steady=steady))
    return out


@pytest.fixture(scope="session")
def convergence_result(tmp_path_factory):
    """Nested-mesh refinement study of the example-3 setting at t=0.01."""
    outdir = tmp_path_factory.mktemp("convergence")
    doc = presets.preset("convergence")
    return cli.run_convergence_study(
        doc,
        levels=presets.CONVERGENCE_LEVELS,
        reference=presets.CONVERGENCE_REFERENCE,
        outdir=str(outdir),
        make_plots=False,
    )


def random_mixture(rng, n=None):
    """A random admissible mixture for property tests."""
    if n is None:
        n = int(rng.integers(2, 5))
    from msms.mixture import MixtureSpec

    M = rng.uniform(0.5, 3.0, n)
    z = rng.integers(-1, 2, n).astype(float)
    D = rng.uniform(0.2, 2.0, (n, n))
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return MixtureSpec(n=n, M=M, z=z, Dms=D)


def random_interior_rho(rng, n):
    """A random composition bounded away from the simplex boundary."""
    return rng.dirichlet(np.ones(n)) * 0.9 + 0.1 / n
