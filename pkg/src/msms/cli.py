"""Command-line front end: scenario runs, the refinement study, CSV/SVG output.

Exit codes: 0 success, 2 scenario validation failure, 3 non-convergence of
the time stepper, 1 for I/O errors.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import diagnostics, plots, presets, stepper
from .errors import InvalidScenarioError, NonConvergenceError
from .fem1d import Grid1D, l2_distance


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_solution_csv(path: str, scenario: stepper.Scenario, traj: stepper.Trajectory) -> None:
    n = scenario.spec.n
    header = (
        ["t", "y"]
        + [f"rho_{i + 1}" for i in range(n)]
        + [f"x_{i + 1}" for i in range(n)]
        + ["Phi"]
    )
    nodes = scenario.grid.nodes
    rows = []
    for t, state in traj.frames:
        for j, y in enumerate(nodes):
            rows.append(
                [t, y]
                + [state.rho[i, j] for i in range(n)]
                + [state.x[i, j] for i in range(n)]
                + [state.phi[j]]
            )
    _write_csv(path, header, rows)


def write_diagnostics_csv(path: str, scenario: stepper.Scenario, traj: stepper.Trajectory) -> None:
    n = scenario.spec.n
    header = (
        ["t", "H", "H_rel"]
        + [f"mass_{i + 1}" for i in range(n)]
        + ["entropy_residual", "iterations", "zeta_inf"]
    )
    grid, spec = scenario.grid, scenario.spec
    lift = stepper.build_lift(scenario)
    state0 = stepper.init_state(scenario, lift)
    h0 = diagnostics.entropy(grid, state0, lift, spec)
    h0_rel = (
        diagnostics.relative_entropy(grid, state0, traj.steady, spec)
        if traj.steady is not None
        else None
    )
    rows: List[List[Any]] = [
        [0.0, h0, h0_rel]
        + list(diagnostics.masses(grid, state0))
        + [0.0, 0, 0.0]
    ]
    for rep in traj.reports:
        rows.append(
            [rep.t, rep.H, rep.H_rel]
            + list(rep.masses)
            + [rep.entropy_residual, rep.iterations, rep.zeta_inf]
        )
    _write_csv(path, header, rows)


def write_convergence_csv(
    path: str,
    n_species: int,
    hs: Sequence[float],
    errs: Dict[str, List[float]],
    rates: Dict[str, List[float]],
) -> None:
    fields = [f"rho_{i + 1}" for i in range(n_species)] + ["Phi"]
    header = ["h"] + [f"err_{f}" for f in fields] + [f"rate_{f}" for f in fields]
    rows = []
    for lvl, h in enumerate(hs):
        row: List[Any] = [h]
        row += [errs[f][lvl] for f in fields]
        row += [None if lvl == 0 else rates[f][lvl - 1] for f in fields]
        rows.append(row)
    _write_csv(path, header, rows)


def _steady_reference(scenario: stepper.Scenario) -> Optional[stepper.State]:
    """Reference state for relative entropy, per the scenario's hstar mode."""
    if scenario.hstar == "constant":
        lift = stepper.build_lift(scenario)
        state0 = stepper.init_state(scenario, lift)
        rho_inf = diagnostics.masses(scenario.grid, state0)
        return stepper.constant_state(scenario, lift, rho_inf)
    if scenario.hstar == "stationary":
        state, reached = stepper.run_to_stationarity(scenario)
        if not reached:
            print("warning: stationarity tolerance not reached; using last state")
        return state
    return None


def run_scenario(scenario: stepper.Scenario, outdir: str, make_plots: bool) -> stepper.Trajectory:
    steady = _steady_reference(scenario)
    traj = stepper.run(scenario, steady=steady)
    os.makedirs(outdir, exist_ok=True)
    write_solution_csv(os.path.join(outdir, "solution.csv"), scenario, traj)
    write_diagnostics_csv(os.path.join(outdir, "diagnostics.csv"), scenario, traj)
    if make_plots:
        emit_plots(outdir, scenario=scenario, trajectory=traj)
    return traj


def emit_plots(
    outdir: str,
    scenario: Optional[stepper.Scenario] = None,
    trajectory: Optional[stepper.Trajectory] = None,
    convergence: Optional[Dict[str, Any]] = None,
) -> None:
    """Best-effort SVG plots of the tables already written to ``outdir``."""
    if scenario is not None and trajectory is not None:
        nodes = scenario.grid.nodes
        final = trajectory.final
        series = [
            (nodes, final.rho[i], f"rho_{i + 1}") for i in range(scenario.spec.n)
        ]
        plots.try_plot(
            plots.line_plot_svg,
            os.path.join(outdir, "densities.svg"),
            series,
            f"densities at t={final.t:g}",
            "y",
            "rho_i",
        )
        plots.try_plot(
            plots.line_plot_svg,
            os.path.join(outdir, "potential.svg"),
            [(nodes, final.phi, "Phi")],
            f"potential at t={final.t:g}",
            "y",
            "Phi",
        )
        if trajectory.reports:
            ts = [r.t for r in trajectory.reports]
            plots.try_plot(
                plots.line_plot_svg,
                os.path.join(outdir, "entropy.svg"),
                [(ts, [r.H for r in trajectory.reports], "H")],
                "entropy vs time",
                "t",
                "H",
            )
            hrel = [(r.t, r.H_rel) for r in trajectory.reports if r.H_rel is not None]
            if hrel:
                plots.try_plot(
                    plots.line_plot_svg,
                    os.path.join(outdir, "relative_entropy.svg"),
                    [([p[0] for p in hrel], [p[1] for p in hrel], "H*")],
                    "relative entropy vs time",
                    "t",
                    "H*",
                    ylog=True,
                )
    if convergence is not None:
        hs = convergence["hs"]
        series = [
            (hs, errs, field) for field, errs in convergence["errs"].items()
        ]
        plots.try_plot(
            plots.line_plot_svg,
            os.path.join(outdir, "convergence.svg"),
            series,
            "L2 error vs mesh width",
            "h",
            "error",
            xlog=True,
            ylog=True,
            guide_slope=2.0,
        )


def run_convergence_study(
    doc: Dict[str, Any],
    levels: Sequence[int],
    reference: int,
    outdir: str,
    make_plots: bool,
) -> Dict[str, Any]:
    """Run nested-mesh refinements concurrently and tabulate L2 errors/rates."""
    for lvl in levels:
        if reference % lvl != 0:
            raise InvalidScenarioError(
                f"reference mesh {reference} does not refine level {lvl}"
            )
    n_species = doc["species"]["n"]

    def job(n_p: int) -> stepper.State:
        local = copy.deepcopy(doc)
        local["domain"]["n_p"] = n_p
        local["time"]["output_every"] = None
        scen = presets.scenario_from_doc(local, name=f"np{n_p}")
        return stepper.run(scen).final

    all_np = list(levels) + [reference]
    max_workers = int(os.environ.get("MSMS_THREADS", len(all_np)))
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        finals = dict(zip(all_np, pool.map(job, all_np)))

    ref_state = finals[reference]
    ref_grid = Grid1D(reference)
    fields = [f"rho_{i + 1}" for i in range(n_species)] + ["Phi"]
    errs: Dict[str, List[float]] = {f: [] for f in fields}
    for n_p in levels:
        grid = Grid1D(n_p)
        st = finals[n_p]
        for i in range(n_species):
            errs[f"rho_{i + 1}"].append(
                l2_distance(grid, st.rho[i], ref_grid, ref_state.rho[i])
            )
        errs["Phi"].append(l2_distance(grid, st.phi, ref_grid, ref_state.phi))

    hs = [1.0 / n_p for n_p in levels]
    rates: Dict[str, List[float]] = {}
    fits: Dict[str, float] = {}
    for f in fields:
        slopes, fit = diagnostics.convergence_rates(hs, errs[f])
        rates[f] = slopes
        fits[f] = fit

    os.makedirs(outdir, exist_ok=True)
    write_convergence_csv(
        os.path.join(outdir, "convergence.csv"), n_species, hs, errs, rates
    )
    if make_plots:
        emit_plots(outdir, convergence={"hs": hs, "errs": errs})
    return {"hs": hs, "errs": errs, "rates": rates, "fits": fits}


def _parse_override(text: str):
    if "=" not in text:
        raise InvalidScenarioError(f"override '{text}': expected key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _load_doc(args: argparse.Namespace) -> Dict[str, Any]:
    if args.preset:
        doc = presets.preset(args.preset)
    else:
        with open(args.scenario, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    for ov in args.override or []:
        key, value = _parse_override(ov)
        presets.apply_override(doc, key, value)
    return presets.validate_scenario(doc)


def _add_common(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=presets.PRESET_NAMES, help="built-in scenario")
    src.add_argument("--scenario", help="path to a scenario JSON file")
    p.add_argument("--out", help="output directory (default: scenario outputs.dir)")
    p.add_argument(
        "--override",
        action="append",
        metavar="KEY=VALUE",
        help="dotted-path scenario override, e.g. time.T=0.5 or species.M.0=4",
    )
    p.add_argument("--plots", action="store_true", help="also write SVG plots")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="msms",
        description="Entropy-variable finite-element solver for ionized mixtures",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and write CSV tables")
    _add_common(p_run)
    p_run.add_argument(
        "--fit-window",
        nargs=2,
        type=float,
        default=(1.0, 4.0),
        metavar=("T0", "T1"),
        help="time window of the relative-entropy decay fit",
    )

    p_conv = sub.add_parser("convergence", help="nested-mesh refinement study")
    _add_common(p_conv)
    p_conv.add_argument(
        "--levels",
        default=",".join(str(v) for v in presets.CONVERGENCE_LEVELS),
        help="comma-separated element counts",
    )
    p_conv.add_argument(
        "--reference-np",
        type=int,
        default=presets.CONVERGENCE_REFERENCE,
        help="element count of the reference mesh",
    )

    args = parser.parse_args(argv)

    try:
        doc = _load_doc(args)
    except (InvalidScenarioError, json.JSONDecodeError) as exc:
        print(f"scenario validation failed: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read scenario '{args.scenario}': {exc}", file=sys.stderr)
        return 1

    outdir = args.out or doc["outputs"]["dir"]
    make_plots = args.plots or doc["outputs"]["plots"]

    try:
        if args.command == "run":
            scenario = presets.scenario_from_doc(doc, name=args.preset or "scenario")
            traj = run_scenario(scenario, outdir, make_plots)
            last = traj.reports[-1] if traj.reports else None
            if last is not None:
                print(
                    f"finished t={last.t:g}: H={last.H:.6g}, "
                    f"max entropy residual={max(r.entropy_residual for r in traj.reports):.3e}, "
                    f"iterations/step max={max(r.iterations for r in traj.reports)}"
                )
                if any(r.H_rel is not None for r in traj.reports):
                    ts = [r.t for r in traj.reports]
                    hr = [r.H_rel for r in traj.reports]
                    try:
                        slope, r2 = diagnostics.semilog_fit(
                            ts, hr, tuple(args.fit_window)
                        )
                        print(f"relative-entropy decay rate {-slope:.4g} (R^2={r2:.4f})")
                    except ValueError as exc:
                        print(f"decay fit skipped: {exc}")
            else:
                print("finished t=0: initial state only")
        else:
            levels = [int(v) for v in str(args.levels).split(",") if v]
            result = run_convergence_study(
                doc, levels, args.reference_np, outdir, make_plots
            )
            for field, fit in result["fits"].items():
                print(f"{field}: least-squares rate {fit:.3f}")
        print(f"outputs written to {outdir}")
        return 0
    except InvalidScenarioError as exc:
        print(f"scenario validation failed: {exc}", file=sys.stderr)
        return 2
    except NonConvergenceError as exc:
        print(f"time stepper failed to converge: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"I/O failure ({getattr(exc, 'filename', outdir)}): {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
