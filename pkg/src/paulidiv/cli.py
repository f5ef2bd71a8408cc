"""Command-line front end.

Subcommands: ``classify``, ``simulate``, ``synthesize``, ``bodyfrac`` and
``props``. Grid data goes to CSV (header row with units), structured
results to JSON (sorted keys, with the package version and the resolved
configuration). ``--out PREFIX`` writes ``PREFIX.csv`` / ``PREFIX.json``
(plus ``PREFIX.schedule.json`` for ``synthesize``); without it the
``--format`` representation is printed to stdout.

Exit codes: 0 ok, 2 configuration error, 3 degenerate input (e.g. every
sample singular), 4 infeasible synthesis target.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .collision import (
    ControlledAxis,
    FactorizedIID,
    HamiltonianXY,
    ghz_branches,
    run_block_mixture,
    run_branch_correlated,
    run_factorized,
    run_interleaved,
    stroboscopic_coupling,
)
from .core import Trajectory, bloch_state
from .divisibility import (
    SAMPLED_TOL,
    TOL,
    classify_family,
    classify_trajectory,
    kappa_sampled,
    mc_body_fraction,
)
from .families import (
    constant_map,
    dephasing_mixture,
    eternal_family,
    oscillatory_dephasing,
    oscillatory_depolarizing,
    pauli_semigroup,
    ultimate_semigroup,
    volume_example,
)
from .props import (
    QUANTITIES,
    is_entanglement_annihilating_2copy,
    monotonicity_scan,
    t_ea_dephasing_mixture,
)
from .synthesis import (
    CouplingTooWeak,
    NonCPTargetError,
    minimal_coupling,
    schedule_pauli,
    schedule_to_json,
    verify_schedule,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3
EXIT_INFEASIBLE = 4

FAMILY_NAMES = (
    "semigroup",
    "ultimate",
    "dephasing_mixture",
    "eternal",
    "oscillatory_dephasing",
    "oscillatory_depolarizing",
    "volume_example",
    "constant",
    "identity",
)

DEFAULTS = {
    "p1": 1 / 3,
    "p2": 1 / 3,
    "p3": 1 / 3,
    "gamma": 1.0,
    "gamma_i": 1.0,
    "gamma_j": 1.0,
    "Gamma1": 1.0,
    "Gamma2": 1.0,
    "Gamma3": 2.0,
    "g": None,
    "axis": "z",
    "axes": "xy",
    "lambda1": 1.0,
    "lambda2": 1.0,
    "lambda3": 1.0,
    "t_max": 1.0,
    "n_points": 101,
    "grid": None,
    "tau": 1e-3,
    "n": None,
    "seed": 0,
    "workers": 1,
    "format": None,
    "out": None,
    "input": None,
    "model": "factorized",
    "gamma1": 1.0,
    "gamma2": 1.0,
    "g1": None,
    "g2": None,
    "pattern": "0,1",
    "pair": "x",
    "quantity": None,
    "tol": None,
    "max_phase_lag": 0.1,
    "family": None,
}


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _json_text(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _emit(cfg: dict, csv_text: Optional[str], doc: dict, stdout) -> None:
    doc = {"version": __version__, "config": _config_echo(cfg), **doc}
    if cfg["out"]:
        prefix = Path(cfg["out"])
        prefix.parent.mkdir(parents=True, exist_ok=True)
        if csv_text is not None:
            Path(f"{prefix}.csv").write_text(csv_text)
        Path(f"{prefix}.json").write_text(_json_text(doc))
    elif (cfg["format"] or "json") == "csv" and csv_text is not None:
        stdout.write(csv_text)
    else:
        stdout.write(_json_text(doc))


def _config_echo(cfg: dict) -> dict:
    return {k: cfg[k] for k in sorted(cfg) if k not in ("config", "func")}


# ---------------------------------------------------------------- inputs


def _axes_pair(text: str) -> tuple[str, str]:
    text = str(text).replace(",", "").strip().lower()
    if len(text) != 2 or any(c not in "xyz" for c in text) or text[0] == text[1]:
        raise ConfigError(f"--axes must name two different axes, e.g. 'xy' (got {text!r})")
    return text[0], text[1]


def build_family(cfg: dict):
    name = cfg.get("family")
    if name is None:
        raise ConfigError("--family is required (or --input for a sampled trajectory)")
    p = (cfg["p1"], cfg["p2"], cfg["p3"])
    try:
        if name == "semigroup":
            return pauli_semigroup((cfg["Gamma1"], cfg["Gamma2"], cfg["Gamma3"]))
        if name == "ultimate":
            return ultimate_semigroup(cfg["gamma_i"], cfg["gamma_j"], _axes_pair(cfg["axes"]))
        if name == "dephasing_mixture":
            return dephasing_mixture(p, cfg["gamma"])
        if name == "eternal":
            return eternal_family(p, cfg["gamma_i"], cfg["gamma_j"], _axes_pair(cfg["axes"]))
        if name == "oscillatory_dephasing":
            return oscillatory_dephasing(cfg["g"] if cfg["g"] is not None else 1.0, cfg["axis"])
        if name == "oscillatory_depolarizing":
            return oscillatory_depolarizing(cfg["g"] if cfg["g"] is not None else 1.0)
        if name == "volume_example":
            return volume_example()
        if name == "constant":
            return constant_map((cfg["lambda1"], cfg["lambda2"], cfg["lambda3"]))
        if name == "identity":
            return constant_map((1.0, 1.0, 1.0))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown family {name!r}; choose from {', '.join(FAMILY_NAMES)}")


def build_grid(cfg: dict) -> np.ndarray:
    if cfg["grid"]:
        try:
            start, stop, num = str(cfg["grid"]).split(":")
            start, stop, num = float(start), float(stop), int(num)
        except ValueError as exc:
            raise ConfigError("--grid must look like START:STOP:N") from exc
    else:
        start, stop, num = 0.0, float(cfg["t_max"]), int(cfg["n_points"])
    if num < 2 or not stop > start:
        raise ConfigError("the grid needs at least two points and STOP > START")
    return np.linspace(start, stop, num)


def read_trajectory_csv(path) -> Trajectory:
    """Read columns ``t, lambda1, lambda2, lambda3`` (unit suffixes in brackets are ignored)."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ConfigError(f"{path} is empty")
    header = [h.split("[")[0].strip().lower() for h in rows[0]]
    try:
        cols = [header.index(c) for c in ("t", "lambda1", "lambda2", "lambda3")]
        data = np.array([[float(r[c]) for c in cols] for r in rows[1:] if r], dtype=float)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{path}: need numeric columns t, lambda1, lambda2, lambda3") from exc
    if data.shape[0] < 3:
        raise ConfigError(f"{path}: need at least three samples")
    try:
        return Trajectory(data[:, 0], data[:, 1:], Path(path).stem)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# --------------------------------------------------------------- commands


def cmd_classify(cfg: dict, stdout) -> int:
    if cfg["input"]:
        traj = read_trajectory_csv(cfg["input"])
        tol = cfg["tol"] if cfg["tol"] is not None else SAMPLED_TOL
        report = classify_trajectory(traj, tol)
        kappas = []
        for i in range(len(traj)):
            try:
                kappas.append(tuple(kappa_sampled(traj, i)))
            except ValueError:
                kappas.append((float("nan"),) * 3)
        source = {"input": str(cfg["input"])}
    else:
        fam = build_family(cfg)
        times = build_grid(cfg)
        tol = cfg["tol"] if cfg["tol"] is not None else TOL
        report = classify_family(fam, times, tol)
        traj = fam.trajectory(times)
        kappas = [c.kappa if c is not None else (float("nan"),) * 3 for c in report.sample_classes]
        source = {"family": fam.name, "parameters": fam.parameters}
    if all(label is None for label in report.sample_labels):
        sys.stderr.write("every sample is singular (some lambda vanishes); nothing to classify\n")
        return EXIT_DEGENERATE
    rows = []
    for t, lam, k, c in zip(traj.times, traj.lambdas, kappas, report.sample_classes):
        label = c.label.value if c is not None else "Singular"
        slacks = c.cp_slacks if c is not None else (float("nan"),) * 3
        rows.append([t, *lam, *k, label, *slacks])
    header = [
        "t [time]", "lambda1", "lambda2", "lambda3",
        "kappa1 [1/time]", "kappa2 [1/time]", "kappa3 [1/time]", "class",
        "slack1 [1/time]", "slack2 [1/time]", "slack3 [1/time]",
    ]
    doc = {"source": source, "tol": tol, "report": report.to_dict()}
    _emit(cfg, _csv_text(header, rows), doc, stdout)
    return EXIT_OK


def _positive(cfg: dict, *keys) -> None:
    for key in keys:
        if cfg[key] is None or not float(cfg[key]) > 0:
            raise ConfigError(f"--{key.replace('_', '-')} must be positive")


def _n_collisions(cfg: dict) -> int:
    if cfg["n"] is not None:
        n = int(cfg["n"])
    else:
        n = int(round(float(cfg["t_max"]) / float(cfg["tau"])))
    if n < 1:
        raise ConfigError("need at least one collision (--n or --t-max / --tau)")
    return n


def cmd_simulate(cfg: dict, stdout) -> int:
    _positive(cfg, "tau")
    tau = float(cfg["tau"])
    n = _n_collisions(cfg)
    model = cfg["model"]
    meta: dict = {"model": model, "tau": tau, "n": n}
    if model == "factorized":
        g1 = cfg["g1"] if cfg["g1"] is not None else stroboscopic_coupling(cfg["gamma1"], tau)
        g2 = cfg["g2"] if cfg["g2"] is not None else stroboscopic_coupling(cfg["gamma2"], tau)
        traj = run_factorized(HamiltonianXY(g1, g2, tau), n)
        meta.update(g1=g1, g2=g2)
    elif model == "interleaved":
        # alternating pure dephasings about the listed axes, each of rate gamma
        axes = [a for a in str(cfg["axes"]).replace(",", "").lower()]
        if not axes or any(a not in "xyz" for a in axes):
            raise ConfigError("--axes must list dephasing axes, e.g. 'xz'")
        try:
            pattern = [int(x) for x in str(cfg["pattern"]).split(",")]
        except ValueError as exc:
            raise ConfigError("--pattern must be comma-separated model indices") from exc
        g = stroboscopic_coupling(2 * cfg["gamma"], tau)
        models = [FactorizedIID(_dephasing_collision(a, g, tau)) for a in axes]
        try:
            traj = run_interleaved(models, pattern, n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        meta.update(axes=axes, pattern=pattern, g=g, gamma=cfg["gamma"])
    elif model == "block_mixture":
        p = (cfg["p1"], cfg["p2"], cfg["p3"])
        g = stroboscopic_coupling(2 * cfg["gamma"], tau)
        runs = [run_factorized(_dephasing_collision(a, g, tau), n) for a in "xyz"]
        try:
            traj = run_block_mixture(p, runs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        meta.update(weights=list(p), g=g, gamma=cfg["gamma"])
    elif model == "ghz":
        g = cfg["g"] if cfg["g"] is not None else 1.0
        traj = run_branch_correlated(ghz_branches(n), ControlledAxis(cfg["axis"], g, tau), n)
        meta.update(g=g, axis=cfg["axis"])
    else:
        raise ConfigError(f"unknown model {model!r}")
    rows = [[k, t, *lam] for k, (t, lam) in enumerate(zip(traj.times, traj.lambdas))]
    header = ["k", "t [time]", "lambda1", "lambda2", "lambda3"]
    meta["seed"] = cfg["seed"]
    _emit(cfg, _csv_text(header, rows), {"simulation": meta}, stdout)
    return EXIT_OK


def _dephasing_collision(axis: str, g: float, tau: float) -> HamiltonianXY:
    """Pair collision ``g/2 s_m (x) s_m`` (a pure dephasing about ``axis``)."""
    other = "xyz"[("xyz".index(axis) + 1) % 3]
    return HamiltonianXY(g, 0.0, tau, axes=(axis, other))


def cmd_synthesize(cfg: dict, stdout) -> int:
    _positive(cfg, "tau")
    tau = float(cfg["tau"])
    if cfg["input"]:
        target = read_trajectory_csv(cfg["input"])
        n = int(cfg["n"]) if cfg["n"] is not None else int(np.floor(target.times[-1] / tau + 1e-9))
    else:
        target = build_family(cfg)
        n = _n_collisions(cfg)
    lag = float(cfg["max_phase_lag"])
    try:
        if cfg["g"] is not None:
            g = float(cfg["g"])
        else:
            g = 1.5 * minimal_coupling(target, tau, n, lag, rtol=0.02)
        schedule = schedule_pauli(target, g, tau, n, max_phase_lag=lag)
    except NonCPTargetError as exc:
        sys.stderr.write(f"infeasible target: {exc} (first violation at t = {exc.time})\n")
        return EXIT_INFEASIBLE
    except (CouplingTooWeak, ValueError) as exc:
        sys.stderr.write(f"infeasible target: {exc}\n")
        return EXIT_INFEASIBLE
    achieved = verify_schedule(schedule)
    err = np.abs(achieved.lambdas - schedule.target_lambdas)
    rows = [
        [k, t, *tl, *al, e]
        for k, (t, tl, al, e) in enumerate(
            zip(achieved.times, schedule.target_lambdas, achieved.lambdas, err.max(axis=1))
        )
    ]
    header = [
        "k", "t [time]", "target_lambda1", "target_lambda2", "target_lambda3",
        "achieved_lambda1", "achieved_lambda2", "achieved_lambda3", "max_abs_error",
    ]
    doc = {
        "synthesis": {
            "g": schedule.g,
            "tau": tau,
            "n_slots": schedule.n_slots,
            "weights": list(schedule.weights),
            "max_abs_error": float(err.max()),
        }
    }
    if cfg["out"]:
        Path(f"{cfg['out']}.schedule.json").parent.mkdir(parents=True, exist_ok=True)
        Path(f"{cfg['out']}.schedule.json").write_text(schedule_to_json(schedule))
    _emit(cfg, _csv_text(header, rows), doc, stdout)
    return EXIT_OK


def cmd_bodyfrac(cfg: dict, stdout) -> int:
    n = int(cfg["n"]) if cfg["n"] is not None else 10**6
    if n < 1:
        raise ConfigError("--n must be >= 1")
    if cfg["seed"] is None:
        raise ConfigError("--seed is required")
    res = mc_body_fraction(n, int(cfg["seed"]), int(cfg["workers"]))
    doc = {
        "body_fraction": {
            "fraction": res.fraction,
            "stderr": res.stderr,
            "n_samples": res.n_samples,
            "seed": res.seed,
            "reference": 3 / 32,
        }
    }
    if cfg["out"] or cfg["format"] == "json":
        _emit(cfg, None, doc, stdout)
    if cfg["format"] != "json":
        stdout.write(
            f"fraction {res.fraction!r}\nstderr {res.stderr!r}\nn_samples {res.n_samples}\n"
        )
    return EXIT_OK


_PAIRS = {
    "x": ((1, 0, 0), (-1, 0, 0)),
    "y": ((0, 1, 0), (0, -1, 0)),
    "z": ((0, 0, 1), (0, 0, -1)),
}


def cmd_props(cfg: dict, stdout) -> int:
    fam = build_family(cfg)
    times = build_grid(cfg)
    traj = fam.trajectory(times)
    if cfg["pair"] not in _PAIRS:
        raise ConfigError("--pair must be x, y or z")
    pair = tuple(bloch_state(r) for r in _PAIRS[cfg["pair"]])
    names = [cfg["quantity"]] if cfg["quantity"] else list(QUANTITIES)
    for q in names:
        if q not in QUANTITIES:
            raise ConfigError(f"unknown quantity {q!r}")
    reports = [monotonicity_scan(traj, pair, q) for q in names]
    ea = [is_entanglement_annihilating_2copy(row) for row in traj.lambdas]
    rows = [
        [t, *[r.values[i] for r in reports], int(ea[i])] for i, t in enumerate(traj.times)
    ]
    header = ["t [time]"] + [
        f"{r.quantity} [{r.units}]" if r.units else r.quantity for r in reports
    ] + ["ea_2copy"]
    doc: dict = {
        "family": fam.name,
        "pair": cfg["pair"],
        "monotonicity": {
            r.quantity: {"violations": [list(v) for v in r.violations], "tol": r.tol, "units": r.units}
            for r in reports
        },
    }
    if fam.name == "dephasing_mixture":
        doc["t_ea"] = t_ea_dephasing_mixture(fam.parameters["p"], fam.parameters["gamma"])
    _emit(cfg, _csv_text(header, rows), doc, stdout)
    return EXIT_OK


# ----------------------------------------------------------------- parser


def _add_family_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("family")
    g.add_argument("--family", choices=FAMILY_NAMES)
    for name in ("p1", "p2", "p3"):
        g.add_argument(f"--{name}", type=float, help="mixture weight")
    g.add_argument("--gamma", type=float, help="rate [1/time]")
    g.add_argument("--gamma-i", dest="gamma_i", type=float, help="rate [1/time]")
    g.add_argument("--gamma-j", dest="gamma_j", type=float, help="rate [1/time]")
    for name in ("Gamma1", "Gamma2", "Gamma3"):
        g.add_argument(f"--{name}", type=float, help="decoherence rate [1/time]")
    g.add_argument("--g", type=float, help="coupling [1/time]")
    g.add_argument("--axis", choices=("x", "y", "z"))
    g.add_argument("--axes", help="two axes, e.g. xy")
    for name in ("lambda1", "lambda2", "lambda3"):
        g.add_argument(f"--{name}", type=float, help="constant family value")


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("grid")
    g.add_argument("--grid", help="START:STOP:N")
    g.add_argument("--t-max", dest="t_max", type=float)
    g.add_argument("--n-points", dest="n_points", type=int)


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output path prefix")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--config", help="JSON file with defaults for any flag")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paulidiv", description="Divisibility and collision models of qubit Pauli maps."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="classify a family or a sampled trajectory")
    _add_family_flags(p)
    _add_grid_flags(p)
    p.add_argument("--input", help="CSV with columns t, lambda1, lambda2, lambda3")
    p.add_argument("--tol", type=float)
    _add_output_flags(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("simulate", help="run a collision model")
    p.add_argument("--model", choices=("factorized", "interleaved", "block_mixture", "ghz"))
    p.add_argument("--gamma1", type=float, help="XY-model rate [1/time]")
    p.add_argument("--gamma2", type=float, help="XY-model rate [1/time]")
    p.add_argument("--g1", type=float, help="coupling [1/time], overrides --gamma1")
    p.add_argument("--g2", type=float, help="coupling [1/time], overrides --gamma2")
    p.add_argument("--pattern", help="slot pattern over --axes models, e.g. 0,1")
    p.add_argument("--tau", type=float, help="collision duration [time]")
    p.add_argument("--n", type=int, help="number of collisions")
    p.add_argument("--t-max", dest="t_max", type=float)
    for name in ("p1", "p2", "p3"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--gamma", type=float, help="dephasing rate [1/time]")
    p.add_argument("--g", type=float, help="GHZ coupling [1/time]")
    p.add_argument("--axis", choices=("x", "y", "z"))
    p.add_argument("--axes", help="dephasing axes for the interleaved model, e.g. xz")
    _add_output_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("synthesize", help="compile a target into a collision schedule")
    _add_family_flags(p)
    p.add_argument("--input", help="CSV target with columns t, lambda1, lambda2, lambda3")
    p.add_argument("--tau", type=float, help="slot duration [time]")
    p.add_argument("--n", type=int, help="number of slots")
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--max-phase-lag", dest="max_phase_lag", type=float, help="[rad]")
    _add_output_flags(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("bodyfrac", help="Monte Carlo fraction of semigroup-reachable channels")
    p.add_argument("--n", type=int, help="tetrahedron samples")
    p.add_argument("--workers", type=int)
    _add_output_flags(p)
    p.set_defaults(func=cmd_bodyfrac)

    p = sub.add_parser("props", help="monotone quantities along a family")
    _add_family_flags(p)
    _add_grid_flags(p)
    p.add_argument("--pair", choices=tuple(_PAIRS), help="orthogonal Bloch pair")
    p.add_argument("--quantity", choices=tuple(QUANTITIES))
    _add_output_flags(p)
    p.set_defaults(func=cmd_props)
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the ``--config`` file, then explicit flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(loaded) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(loaded)
    cfg.update({k: v for k, v in vars(args).items() if v is not None and k in DEFAULTS})
    cfg["command"] = args.command
    return cfg


def main(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = resolve_config(args)
        return args.func(cfg, stdout)
    except ValueError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
