"""Scenario documents: built-in presets, schema validation and construction.

A scenario document is a plain JSON object with the sections ``species``,
``physics``, ``domain``, ``bc``, ``initial``, ``time``, ``solver`` and
``outputs``.  Unknown keys are rejected anywhere in the document.  Presets
are embedded so the command-line tool is self-contained.
"""

from __future__ import annotations

import copy
from typing import Any, Callable, Dict, List

import numpy as np

from .errors import InvalidScenarioError
from .fem1d import Grid1D
from .mixture import MixtureSpec
from .stepper import Scenario, SolverParams

PRESET_NAMES = (
    "example1",
    "example2",
    "example3",
    "example4",
    "example5",
    "convergence",
)

# ternary diffusivities and charges shared by all presets
_D3 = [[0.0, 0.833, 0.680], [0.833, 0.0, 0.168], [0.680, 0.168, 0.0]]
_Z3 = [1.0, 1.0, 0.0]


def _base_doc() -> Dict[str, Any]:
    return {
        "species": {"n": 3, "M": [1.0, 1.0, 1.0], "z": list(_Z3), "Dms": copy.deepcopy(_D3)},
        "physics": {"lambda": 1.0, "f": "zero", "reactions": "none"},
        "domain": {"n_p": 100},
        "bc": {"phi_left": 0.0, "phi_right": 0.0},
        "initial": "ramp",
        "time": {"tau": 1e-3, "T": 17.0, "output_every": 1.0},
        "solver": {
            "eps_reg": 2.0 ** -52,
            "eps_tol": 1e-10,
            "m_max": 100,
            "eta": 1e-5,
            "coupled_solve": True,
        },
        "outputs": {"dir": "out", "plots": False, "hstar": "none"},
    }


def preset(name: str) -> Dict[str, Any]:
    """Return the scenario document of a built-in preset."""
    if name not in PRESET_NAMES:
        raise InvalidScenarioError(f"unknown preset '{name}' (known: {PRESET_NAMES})")
    doc = _base_doc()
    if name == "example1":
        pass
    elif name == "example2":
        doc["species"]["M"] = [6.0, 1.0, 1.0]
        doc["time"]["T"] = 4.0
        doc["time"]["output_every"] = 0.1
        doc["outputs"]["hstar"] = "stationary"
    elif name == "example3":
        doc["species"]["M"] = [2.0, 1.0, 1.0]
        doc["bc"] = {"phi_left": 10.0, "phi_right": 0.0}
        doc["time"]["T"] = 8.0
        doc["time"]["output_every"] = 0.5
    elif name == "example4":
        doc["species"]["M"] = [1.0, 2.0, 1.0]
        doc["bc"] = {"phi_left": 10.0, "phi_right": 0.0}
        doc["time"]["T"] = 8.0
        doc["time"]["output_every"] = 0.5
    elif name == "example5":
        # no electric field: uncharged species give Phi == 0 and zero drift
        doc["species"]["z"] = [0.0, 0.0, 0.0]
        doc["time"]["T"] = 4.0
        doc["time"]["output_every"] = 0.1
        doc["outputs"]["hstar"] = "constant"
    elif name == "convergence":
        doc["species"]["M"] = [2.0, 1.0, 1.0]
        doc["bc"] = {"phi_left": 10.0, "phi_right": 0.0}
        doc["time"] = {"tau": 1e-4, "T": 0.01, "output_every": None}
    return doc


# refinement levels of the spatial-convergence study; the two finest are
# optional extended targets, the reference mesh refines every level
CONVERGENCE_LEVELS = (100, 200, 400)
CONVERGENCE_LEVELS_FULL = (100, 200, 400, 1600, 12800)
CONVERGENCE_REFERENCE = 25600


def ramp_profile(eta: float) -> Callable[[np.ndarray], np.ndarray]:
    """Piecewise-linear ramp datum: species 1 falls from 0.7 to eta across
    (0.25, 0.75), species 2 is the constant 0.2, species 3 closes the simplex."""

    def profile(y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        mid = 0.7 + (eta - 0.7) * (y - 0.25) / 0.5
        rho1 = np.where(y < 0.25, 0.7, np.where(y < 0.75, mid, eta))
        rho2 = np.full_like(y, 0.2)
        return np.stack([rho1, rho2, 1.0 - rho1 - rho2])

    return profile


def _tabulated_profile(table: List[List[float]]) -> Callable[[np.ndarray], np.ndarray]:
    arr = np.asarray(table, dtype=float)
    y_tab = np.linspace(0.0, 1.0, arr.shape[1])

    def profile(y: np.ndarray) -> np.ndarray:
        return np.stack([np.interp(y, y_tab, row) for row in arr])

    return profile


def _tabulated_field(table: List[float]) -> Callable[[np.ndarray], np.ndarray]:
    arr = np.asarray(table, dtype=float)
    y_tab = np.linspace(0.0, 1.0, arr.size)

    def f(y: np.ndarray) -> np.ndarray:
        return np.interp(y, y_tab, arr)

    return f


def _require_keys(section: Any, path: str, required: Dict[str, type], optional=()):
    if not isinstance(section, dict):
        raise InvalidScenarioError(f"{path}: expected an object")
    allowed = set(required) | set(optional)
    for key in section:
        if key not in allowed:
            raise InvalidScenarioError(f"{path}.{key}: unknown key")
    for key in required:
        if key not in section:
            raise InvalidScenarioError(f"{path}.{key}: missing")


def _as_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidScenarioError(f"{path}: expected a number, got {value!r}")
    return float(value)


def validate_scenario(doc: Dict[str, Any]) -> Dict[str, Any]:
    """Validate a scenario document and return its canonical form.

    The canonical form has every key present (defaults filled in), numbers
    as floats, and serializes/parses to itself.
    """
    _require_keys(
        doc,
        "scenario",
        {
            "species": dict,
            "physics": dict,
            "domain": dict,
            "bc": dict,
            "initial": object,
            "time": dict,
            "solver": dict,
        },
        optional=("outputs",),
    )
    out: Dict[str, Any] = {}

    sp = doc["species"]
    _require_keys(sp, "species", {"n": int, "M": list, "z": list, "Dms": list})
    n = sp["n"]
    if not isinstance(n, int) or n < 2:
        raise InvalidScenarioError("species.n: must be an integer >= 2")
    M = [_as_number(v, "species.M") for v in sp["M"]]
    z = [_as_number(v, "species.z") for v in sp["z"]]
    if len(M) != n or len(z) != n:
        raise InvalidScenarioError("species.M and species.z must have length n")
    if any(v <= 0 for v in M):
        raise InvalidScenarioError("species.M: molar masses must be positive")
    D = sp["Dms"]
    if len(D) != n or any(len(row) != n for row in D):
        raise InvalidScenarioError("species.Dms: must be an n x n matrix")
    D = [[_as_number(v, "species.Dms") for v in row] for row in D]
    for i in range(n):
        for j in range(n):
            if i != j and (D[i][j] <= 0 or D[i][j] != D[j][i]):
                raise InvalidScenarioError(
                    "species.Dms: off-diagonal entries must be positive and symmetric"
                )
    out["species"] = {"n": n, "M": M, "z": z, "Dms": D}

    ph = doc["physics"]
    _require_keys(ph, "physics", {"lambda": object, "f": object, "reactions": str})
    lam = _as_number(ph["lambda"], "physics.lambda")
    if lam <= 0:
        raise InvalidScenarioError("physics.lambda: must be positive")
    f_spec = ph["f"]
    if f_spec != "zero":
        if not isinstance(f_spec, list) or len(f_spec) < 2:
            raise InvalidScenarioError('physics.f: expected "zero" or a nodal table')
        f_spec = [_as_number(v, "physics.f") for v in f_spec]
    if ph["reactions"] != "none":
        raise InvalidScenarioError('physics.reactions: only "none" is supported')
    out["physics"] = {"lambda": lam, "f": f_spec, "reactions": "none"}

    dom = doc["domain"]
    _require_keys(dom, "domain", {"n_p": int})
    n_p = dom["n_p"]
    if not isinstance(n_p, int) or n_p < 2:
        raise InvalidScenarioError("domain.n_p: must be an integer >= 2")
    out["domain"] = {"n_p": n_p}

    bc = doc["bc"]
    _require_keys(bc, "bc", {"phi_left": object, "phi_right": object})
    out["bc"] = {
        "phi_left": _as_number(bc["phi_left"], "bc.phi_left"),
        "phi_right": _as_number(bc["phi_right"], "bc.phi_right"),
    }

    init = doc["initial"]
    if isinstance(init, str):
        if init != "ramp":
            raise InvalidScenarioError(f"initial: unknown named profile '{init}'")
        out["initial"] = "ramp"
    elif isinstance(init, dict):
        _require_keys(init, "initial", {"rho": list})
        table = init["rho"]
        if len(table) != n or any(len(row) < 2 for row in table):
            raise InvalidScenarioError("initial.rho: need n rows of nodal values")
        out["initial"] = {
            "rho": [[_as_number(v, "initial.rho") for v in row] for row in table]
        }
    else:
        raise InvalidScenarioError("initial: expected a profile name or nodal tables")

    tm = doc["time"]
    _require_keys(tm, "time", {"tau": object, "T": object}, optional=("output_every",))
    tau = _as_number(tm["tau"], "time.tau")
    T = _as_number(tm["T"], "time.T")
    if tau <= 0 or T < 0:
        raise InvalidScenarioError("time: tau must be positive and T nonnegative")
    oe = tm.get("output_every")
    out["time"] = {
        "tau": tau,
        "T": T,
        "output_every": None if oe is None else _as_number(oe, "time.output_every"),
    }

    sv = doc["solver"]
    _require_keys(
        sv,
        "solver",
        {},
        optional=("eps_reg", "eps_tol", "m_max", "eta", "coupled_solve"),
    )
    defaults = SolverParams()
    m_max = sv.get("m_max", defaults.m_max)
    if not isinstance(m_max, int) or m_max < 1:
        raise InvalidScenarioError("solver.m_max: must be an integer >= 1")
    coupled = sv.get("coupled_solve", True)
    if not isinstance(coupled, bool):
        raise InvalidScenarioError("solver.coupled_solve: must be a boolean")
    out["solver"] = {
        "eps_reg": _as_number(sv.get("eps_reg", defaults.eps_reg), "solver.eps_reg"),
        "eps_tol": _as_number(sv.get("eps_tol", defaults.eps_tol), "solver.eps_tol"),
        "m_max": m_max,
        "eta": _as_number(sv.get("eta", defaults.eta), "solver.eta"),
        "coupled_solve": coupled,
    }

    outputs = doc.get("outputs", {})
    _require_keys(outputs, "outputs", {}, optional=("dir", "plots", "hstar"))
    hstar = outputs.get("hstar", "none")
    if hstar not in ("none", "stationary", "constant"):
        raise InvalidScenarioError('outputs.hstar: expected "none", "stationary" or "constant"')
    plots = outputs.get("plots", False)
    if not isinstance(plots, bool):
        raise InvalidScenarioError("outputs.plots: must be a boolean")
    out["outputs"] = {
        "dir": str(outputs.get("dir", "out")),
        "plots": plots,
        "hstar": hstar,
    }
    return out


def scenario_from_doc(doc: Dict[str, Any], name: str = "") -> Scenario:
    """Build a runnable Scenario from a (validated) document."""
    doc = validate_scenario(doc)
    sp = doc["species"]
    f_spec = doc["physics"]["f"]
    spec = MixtureSpec(
        n=sp["n"],
        M=np.array(sp["M"]),
        z=np.array(sp["z"]),
        Dms=np.array(sp["Dms"]),
        lam=doc["physics"]["lambda"],
        f=None if f_spec == "zero" else _tabulated_field(f_spec),
    )
    params = SolverParams(
        tau=doc["time"]["tau"],
        eps_reg=doc["solver"]["eps_reg"],
        eps_tol=doc["solver"]["eps_tol"],
        m_max=doc["solver"]["m_max"],
        eta=doc["solver"]["eta"],
        coupled_solve=doc["solver"]["coupled_solve"],
    )
    if doc["initial"] == "ramp":
        profile = ramp_profile(params.eta)
    else:
        profile = _tabulated_profile(doc["initial"]["rho"])
    return Scenario(
        spec=spec,
        grid=Grid1D(doc["domain"]["n_p"]),
        initial_profile=profile,
        phi_bc=(doc["bc"]["phi_left"], doc["bc"]["phi_right"]),
        T=doc["time"]["T"],
        params=params,
        output_every=doc["time"]["output_every"],
        hstar=doc["outputs"]["hstar"],
        name=name,
    )


def apply_override(doc: Dict[str, Any], dotted: str, value: Any) -> None:
    """Set a dotted-path entry in a scenario document (list indices allowed)."""
    parts = dotted.split(".")
    target: Any = doc
    try:
        for part in parts[:-1]:
            if isinstance(target, list):
                target = target[int(part)]
            elif isinstance(target, dict):
                if part not in target:
                    raise InvalidScenarioError(
                        f"override path '{dotted}': '{part}' not found"
                    )
                target = target[part]
            else:
                raise InvalidScenarioError(
                    f"override path '{dotted}': cannot descend into {part}"
                )
        last = parts[-1]
        if isinstance(target, list):
            target[int(last)] = value
        elif isinstance(target, dict):
            target[last] = value
        else:
            raise InvalidScenarioError(f"override path '{dotted}': invalid target")
    except (IndexError, ValueError) as exc:
        if isinstance(exc, InvalidScenarioError):
            raise
        raise InvalidScenarioError(f"override path '{dotted}': {exc}")
