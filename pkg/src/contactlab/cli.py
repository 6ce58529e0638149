"""``cea``: batch runner for the verification experiments.

    cea <experiment> [--config path.json] [--set key=value ...] --out dir
    cea list

A config is one JSON document with the top-level keys ``experiment``,
``model`` (as accepted by :func:`contact.build_model`), ``seed``, ``params``
and ``out``.  ``--set`` overrides any leaf through a dotted path, e.g.
``--set params.count=20`` or ``--set model.nodes=[128]``.

Exit status: 0 when every flag passes, 1 when some flag fails, 2 for config
errors, 3 for capability violations, 4 for numerical rejections.  Errors
print one line ``cea: error code=<n> kind=<kind> reason=<text>`` to stderr.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import contact, curvature, geodesics, jacobi, quanto
from .errors import CapabilityError, ConfigError, NumericalRejection
from .fields import ScalarField, l2_norm, random_band_limited
from .report import ExperimentReport, seed_for

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CAPABILITY, EXIT_NUMERICAL = 0, 1, 2, 3, 4
TOP_KEYS = ("experiment", "model", "seed", "params", "out")


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    model: dict
    params: dict
    required: tuple[str, ...] = ()
    restriction: str = ""

    def catalog_line(self) -> str:
        title = f"{self.name} ({self.restriction})" if self.restriction else self.name
        req = ", ".join(self.required) if self.required else "none"
        keys = ", ".join(sorted(self.params))
        return f"{title}\n    {self.description}\n    required: {req}\n    parameters: {keys}"


CATALOG = {
    e.name: e
    for e in (
        Experiment(
            "bracket-check",
            "structure identities, weak divergence, contact condition and bracket algebra",
            {"model": "circle"},
            {"count": 4, "max_freq": 2, "tol": 1e-8},
            restriction="full-structure models",
        ),
        Experiment(
            "curvature-sweep",
            "seeded random planes: nonnegativity and agreement of the two curvature routes",
            {"model": "circle"},
            {"count": 100, "max_freq": 4, "tol": 1e-8},
            restriction="full-structure models",
        ),
        Experiment(
            "geodesic-solve",
            "Euler-Arnold integration with blowup detection and per-frame field output",
            {"model": "circle", "nodes": [1024]},
            {
                "initial": "random",
                "max_freq": 2,
                "amplitude": 1.0,
                "mode": 1,
                "t_end": None,
                "t_fraction": 0.8,
                "dt": None,
                "scheme": "rk4",
                "save_every": 50,
                "tol": 1e-8,
            },
        ),
        Experiment(
            "characteristics-compare",
            "solver against the implicit characteristics solution at a fraction of t*",
            {"model": "circle"},
            {"count": 3, "max_freq": 1, "t_fraction": 0.5, "dt": 1e-3, "tol": 1e-6},
            restriction="models with a coordinate Reeb direction",
        ),
        Experiment(
            "jacobi-demo",
            "closed-form Jacobi fields along Reeb geodesics and their kernel at t = 1",
            {"model": "circle"},
            {"m_list": [1, 2, 4], "t_end": 1.0, "n_times": 11, "tol": 1e-10},
            restriction="circle or darboux_box",
        ),
        Experiment(
            "exp-derivative",
            "finite-difference probes of D exp at c_m along kernel and generic directions",
            {"model": "circle"},
            {"m_list": [1, 2, 4], "epsilons": [1e-2, 5e-3, 2.5e-3], "c_threshold": None, "dt": None},
            restriction="circle or darboux_box",
        ),
        Experiment(
            "quanto-check",
            "quantomorphism subalgebra: totally geodesic defects and bracket closure",
            {"model": "sphere3_hopf"},
            {"count": 20, "max_freq": 3, "tol": 1e-8},
            restriction="full-structure models",
        ),
        Experiment(
            "submersion-check",
            "Boothby-Wang quotient: Hamiltonian fields and the fiber constant of the norm",
            {"model": "sphere3_hopf"},
            {"count": 10, "max_freq": 3, "tol": 1e-8, "spread_tol": 1e-6, "expected_constant": 2 * np.pi},
            restriction="sphere3_hopf only",
        ),
    )
}


def list_experiments() -> str:
    lines = [f"{len(CATALOG)} experiments:"]
    lines += [e.catalog_line() for e in CATALOG.values()]
    return "\n".join(lines) + "\n"


# --- config handling --------------------------------------------------------


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(config: dict, assignment: str) -> None:
    """Set a dotted-path leaf from ``key=value``; the value is parsed as JSON when possible."""
    if "=" not in assignment:
        raise ConfigError(f"--set needs key=value, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    parts = key.strip().split(".")
    if not all(parts):
        raise ConfigError(f"malformed dotted key {key!r}")
    node = config
    for p in parts[:-1]:
        nxt = node.setdefault(p, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"{key!r} descends into a non-object value")
        node = nxt
    node[parts[-1]] = _parse_value(raw)


def resolve_config(experiment: str, config: dict) -> dict:
    """Merge defaults, reject unknown keys and return the resolved config."""
    if experiment not in CATALOG:
        raise ConfigError(f"unknown experiment {experiment!r}; run 'cea list'")
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(config) - set(TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if config.get("experiment", experiment) != experiment:
        raise ConfigError(f"config names experiment {config['experiment']!r} but {experiment!r} was requested")
    entry = CATALOG[experiment]
    params = config.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params must be an object")
    unknown = set(params) - set(entry.params)
    if unknown:
        raise ConfigError(f"unknown parameters for {experiment}: {sorted(unknown)}")
    missing = [k for k in entry.required if k not in params and entry.params.get(k) is None]
    if missing:
        raise ConfigError(f"missing required parameters: {missing}")
    model = config.get("model", {})
    if not isinstance(model, dict):
        raise ConfigError("model must be an object")
    # the default model fills in unless another model is named
    if model.get("model", entry.model["model"]) == entry.model["model"]:
        model = {**entry.model, **model}
    seed = config.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a nonnegative integer")
    resolved = {
        "experiment": experiment,
        "model": copy.deepcopy(model),
        "seed": seed,
        "params": {**copy.deepcopy(entry.params), **copy.deepcopy(params)},
    }
    if "out" in config:
        resolved["out"] = config["out"]
    return resolved


def config_hash(resolved: dict) -> str:
    body = {k: v for k, v in resolved.items() if k != "out"}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()[:16]


def version_string() -> str:
    """``git describe`` of the source tree, or the installed package version."""
    try:
        here = Path(__file__).resolve().parent
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=here,
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        )
        desc = out.stdout.strip()
        if desc:
            return desc
    except (OSError, subprocess.SubprocessError):
        pass
    try:
        from importlib.metadata import version

        return "v" + version("contactlab")
    except Exception:
        return "unknown"


def _int(params: dict, key: str, lo: int = 0) -> int:
    v = params[key]
    if not isinstance(v, int) or isinstance(v, bool) or v < lo:
        raise ConfigError(f"{key} must be an integer >= {lo}")
    return v


def _num(params: dict, key: str, positive: bool = True) -> float:
    v = params[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool) or (positive and not v > 0):
        raise ConfigError(f"{key} must be a {'positive ' if positive else ''}number")
    return float(v)


def _int_list(params: dict, key: str) -> list[int]:
    v = params[key]
    if not isinstance(v, list) or not all(isinstance(m, int) and not isinstance(m, bool) for m in v):
        raise ConfigError(f"{key} must be a list of integers")
    return v


# --- experiments ------------------------------------------------------------


def _bracket_check(model, seed, p) -> ExperimentReport:
    tol = _num(p, "tol")
    count, mf = _int(p, "count", 1), _int(p, "max_freq", 1)
    rep = ExperimentReport("bracket-check")
    defects = contact.structure_defects(model, seed_for(seed, 0))
    fs = [random_band_limited(seed_for(seed, 1, i), mf, model.grid) for i in range(count + 2)]
    div = max(contact.divergence_defect(model, f) for f in fs[:count])
    cond = max(contact.contact_condition_defect(model, f, seed_for(seed, 2, i)) for i, f in enumerate(fs[:count]))
    anti, jac = 0.0, 0.0
    for i in range(count):
        f, g, h = fs[i], fs[i + 1], fs[i + 2]
        fg = contact.contact_bracket(model, f, g)
        gf = contact.contact_bracket(model, g, f)
        anti = max(anti, l2_norm(fg + gf) / max(l2_norm(fg), 1e-300))
        terms = [
            contact.contact_bracket(model, a, contact.contact_bracket(model, b, c))
            for a, b, c in ((f, g, h), (g, h, f), (h, f, g))
        ]
        scale = max(l2_norm(t) for t in terms)
        jac = max(jac, l2_norm(terms[0] + terms[1] + terms[2]) / max(scale, 1e-300))
    rep.metrics = {**defects, "divergence": div, "contact_condition": cond, "antisymmetry": anti, "jacobi_identity": jac}
    rep.rows = [{"identity": k, "defect": v} for k, v in rep.metrics.items()]
    rep.flags = {
        "structure_identities": max(defects.values()) <= tol,
        "divergence": div <= tol,
        "contact_condition": cond <= tol,
        "bracket_antisymmetry": anti <= tol,
        "bracket_jacobi_identity": jac <= tol,
    }
    return rep


def _curvature_sweep(model, seed, p) -> ExperimentReport:
    model._require_full("the curvature sweep")
    rep = curvature.curvature_sweep(model, _int(p, "count"), _int(p, "max_freq", 1), seed)
    tol = _num(p, "tol")
    if rep.metrics.get("count", 0):
        rep.flags = {
            "nonnegative": rep.metrics["negative_samples"] == 0 and rep.metrics["negative_arnold_samples"] == 0,
            "routes_agree": rep.metrics["route_discrepancy_max"] <= tol,
        }
    return rep


def _initial_field(model, seed, p) -> ScalarField:
    kind = p["initial"]
    amp = _num(p, "amplitude", positive=False)
    if kind == "random":
        return amp * random_band_limited(seed_for(seed, 0), _int(p, "max_freq", 1), model.grid)
    if kind == "sine":
        if model.reeb_axis is None:
            raise CapabilityError(f"sine initial data needs a coordinate Reeb direction, {model.name} has none")
        ax = model.grid.axes[model.reeb_axis]
        z = model.grid.coords[model.reeb_axis]
        return ScalarField(model.grid, amp * np.sin(2 * np.pi * _int(p, "mode", 1) * z / ax.period))
    raise ConfigError(f"initial must be 'random' or 'sine', got {kind!r}")


def _geodesic_solve(model, seed, p, out: Path | None) -> ExperimentReport:
    f0 = _initial_field(model, seed, p)
    t_star = geodesics.blowup_time(model, f0)
    if p["t_end"] is not None:
        t_end = _num(p, "t_end", positive=False)
    elif np.isfinite(t_star):
        t_end = _num(p, "t_fraction") * t_star
    else:
        raise ConfigError("no blowup time to scale by; set params.t_end")
    # default: 1000 steps, at most 1e-3 each
    dt = _num(p, "dt") if p["dt"] is not None else min(1e-3, t_end / 1000) if t_end > 0 else 1e-3
    tr = geodesics.integrate_geodesic(
        model, f0, t_end, dt, scheme=p["scheme"], save_every=_int(p, "save_every", 1)
    )
    if out is not None:
        tr.export(out / "frames")
    # conservation is only expected before characteristics cross
    horizon = min(t_end, 0.8 * t_star)
    keep = tr.times <= horizon + 1e-12
    w = tr.states[0].grid.weights
    ref = np.array([np.sum(w * np.abs(f0.values) ** k) for k in (1, 2, 3)])
    ref = np.where(ref > 0, ref, 1.0)
    log = tr.invariants_log[keep]
    drift = np.max(np.abs(log - log[0]), axis=0) / ref
    rep = ExperimentReport("geodesic-solve")
    rep.metrics = {
        "t_end": t_end,
        "dt": dt,
        "blowup_time_predicted": t_star,
        "blowup_detected": tr.blowup_flag,
        "blowup_trigger_time": tr.trigger_time,
        "blowup_trigger_reason": tr.trigger_reason,
        "blowup_time_extrapolated": tr.blowup_time,
        "drift_int_f": drift[0],
        "drift_int_f2": drift[1],
        "drift_int_f3": drift[2],
        "frames": len(tr.states),
    }
    rep.rows = [
        {"t": float(t), "int_f": r[0], "int_f2": r[1], "int_f3": r[2]} for t, r in zip(tr.times, tr.invariants_log)
    ]
    rep.flags = {"conservation": bool(np.all(drift <= _num(p, "tol")))}
    return rep


def _characteristics_compare(model, seed, p) -> ExperimentReport:
    if model.reeb_axis is None:
        raise CapabilityError(f"{model.name} has no coordinate Reeb direction")
    tol, frac, dt = _num(p, "tol"), _num(p, "t_fraction"), _num(p, "dt")
    rep = ExperimentReport("characteristics-compare")
    gaps = []
    for i in range(_int(p, "count", 1)):
        f0 = random_band_limited(seed_for(seed, i), _int(p, "max_freq", 1), model.grid)
        t = frac * geodesics.blowup_time(model, f0)
        if not np.isfinite(t):
            raise NumericalRejection(f"initial datum {i} never blows up; no comparison time")
        num = geodesics.integrate_geodesic(model, f0, t, dt, save_every=10**9, detect_blowup=False).final
        ref = geodesics.implicit_solution_on_grid(model, f0, t)
        gap = l2_norm(num - ref) / l2_norm(ref)
        gaps.append(gap)
        rep.rows.append({"index": i, "t": t, "relative_l2_gap": gap})
    rep.metrics = {"relative_l2_gap_max": max(gaps)}
    rep.flags = {"characteristics_agree": max(gaps) <= tol}
    return rep


def _jacobi_demo(model, seed, p) -> ExperimentReport:
    tol = _num(p, "tol")
    rep = ExperimentReport("jacobi-demo")
    worst_end, worst_res, min_mid = 0.0, 0.0, np.inf
    for m in _int_list(p, "m_list"):
        c, w0 = jacobi.kernel_direction(model, m)
        sol = jacobi.jacobi_solve(model, c, w0, _num(p, "t_end"), _int(p, "n_times", 2))
        end = l2_norm(ScalarField(model.grid, sol.g_at(1.0)))
        mid = l2_norm(ScalarField(model.grid, sol.g_at(0.5)))
        res = sol.residual()
        worst_end, worst_res, min_mid = max(worst_end, end), max(worst_res, res), min(min_mid, mid)
        for t, g in zip(sol.times, sol.g_states):
            rep.rows.append({"m": m, "c_m": c, "t": float(t), "g_norm": l2_norm(g)})
        rep.metrics[f"m={m}"] = {"c_m": c, "g1_norm": end, "g_half_norm": mid, "residual": res}
    rep.flags = {
        "kernel_at_t1": worst_end <= tol,
        "nonzero_at_half": bool(min_mid > 1e3 * tol),
        "jacobi_equation": worst_res <= 1e-6,
    }
    return rep


def _exp_derivative(model, seed, p) -> ExperimentReport:
    eps = p["epsilons"]
    if not isinstance(eps, list) or not all(isinstance(e, (int, float)) for e in eps):
        raise ConfigError("epsilons must be a list of numbers")
    thr = None if p["c_threshold"] is None else _num(p, "c_threshold")
    dt = None if p["dt"] is None else _num(p, "dt")
    return jacobi.c1_failure_report(model, _int_list(p, "m_list"), eps, c_threshold=thr, dt=dt)


def _quanto_check(model, seed, p) -> ExperimentReport:
    model._require_full("the quantomorphism check")
    tol = _num(p, "tol")
    mf = _int(p, "max_freq", 1)
    rep = ExperimentReport("quanto-check")
    tg, wtg, clo = [], [], []
    for i in range(_int(p, "count", 1)):
        f = quanto.random_quantomorphism(model, seed_for(seed, i, 0), mf)
        f2 = quanto.random_quantomorphism(model, seed_for(seed, i, 2), mf)
        g = random_band_limited(seed_for(seed, i, 1), mf, model.grid)
        row = {
            "index": i,
            "totally_geodesic": quanto.totally_geodesic_defect(model, f, g),
            "weak_totally_geodesic": quanto.weak_totally_geodesic_defect(model, f, g),
            "closure": quanto.subalgebra_closure_defect(model, f, f2),
        }
        tg.append(row["totally_geodesic"])
        wtg.append(row["weak_totally_geodesic"])
        clo.append(row["closure"])
        rep.rows.append(row)
    rep.metrics = {"totally_geodesic_max": max(tg), "weak_totally_geodesic_max": max(wtg), "closure_max": max(clo)}
    rep.flags = {
        "totally_geodesic": max(tg) <= tol,
        "weak_totally_geodesic": max(wtg) <= tol,
        "subalgebra_closed": max(clo) <= tol,
    }
    return rep


def _submersion_check(model, seed, p) -> ExperimentReport:
    if model.name != "sphere3_hopf":
        raise CapabilityError(f"submersion-check runs on sphere3_hopf only, not {model.name}")
    mf = _int(p, "max_freq", 1)
    fields = [quanto.random_quantomorphism(model, seed_for(seed, i), mf, mean_zero=True) for i in range(_int(p, "count", 1))]
    sub = quanto.submersion_isometry_check(model, fields)
    rep = ExperimentReport("submersion-check")
    rep.rows = sub.rows
    if not fields:
        rep.metrics = {"count": 0}
        return rep
    br = [quanto.bracket_compatibility_defect(model, a, b)[0] for a, b in zip(fields, fields[1:])]
    hd = max(r["hamiltonian_defect"] for r in sub.rows)
    expected = _num(p, "expected_constant")
    rep.metrics = {
        "hamiltonian_defect_max": hd,
        "fitted_constant": sub.fitted_constant,
        "expected_constant": expected,
        "ratio_spread": sub.ratio_spread,
        "bracket_compatibility_max": max(br) if br else 0.0,
    }
    rep.flags = {
        "hamiltonian_fields": hd <= _num(p, "tol"),
        "ratio_spread": sub.ratio_spread <= _num(p, "spread_tol"),
        "fiber_constant": abs(sub.fitted_constant - expected) <= _num(p, "spread_tol") * expected,
        "bracket_compatible": (max(br) if br else 0.0) <= _num(p, "spread_tol"),
    }
    return rep


_RUNNERS = {
    "bracket-check": _bracket_check,
    "curvature-sweep": _curvature_sweep,
    "characteristics-compare": _characteristics_compare,
    "jacobi-demo": _jacobi_demo,
    "exp-derivative": _exp_derivative,
    "quanto-check": _quanto_check,
    "submersion-check": _submersion_check,
}


def run(resolved: dict, out: str | Path | None = None) -> ExperimentReport:
    """Execute a resolved config; write artifacts to ``out`` when given."""
    name = resolved["experiment"]
    model = contact.build_model(resolved["model"])
    out_dir = Path(out) if out is not None else None
    if name == "geodesic-solve":
        rep = _geodesic_solve(model, resolved["seed"], resolved["params"], out_dir)
    else:
        rep = _RUNNERS[name](model, resolved["seed"], resolved["params"])
    rep.config = resolved
    rep.meta = {"config_hash": config_hash(resolved), "version": version_string()}
    if out_dir is not None:
        rep.write(out_dir)
        (out_dir / "config.json").write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n")
    return rep


def _fail(code: int, kind: str, exc: BaseException) -> int:
    reason = " ".join(str(exc).split()) or type(exc).__name__
    print(f"cea: error code={code} kind={kind} reason={reason}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="cea", description="Contact-geometry verification experiments.")
    ap.add_argument("experiment", help="experiment name, or 'list' for the catalog")
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--out", help="output directory")
    args = ap.parse_args(argv)

    if args.experiment == "list":
        sys.stdout.write(list_experiments())
        return EXIT_OK
    try:
        cfg = {}
        if args.config:
            try:
                cfg = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        for s in args.overrides:
            apply_override(cfg, s)
        resolved = resolve_config(args.experiment, cfg)
        out = args.out or resolved.get("out")
        if not out:
            raise ConfigError("no output directory; pass --out or set 'out' in the config")
        rep = run(resolved, out)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", exc)
    except CapabilityError as exc:
        return _fail(EXIT_CAPABILITY, "capability", exc)
    except NumericalRejection as exc:
        return _fail(EXIT_NUMERICAL, "numerical", exc)
    except (ValueError, TypeError, KeyError) as exc:
        return _fail(EXIT_CONFIG, "config", exc)
    sys.stdout.write(rep.summary())
    return EXIT_OK if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
