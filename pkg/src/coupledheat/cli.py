"""Command-line front end: analyze | verify | spectrum | presets.

Scenarios come from a TOML config (hand-editable, matrices as nested
row-major arrays) or from a named preset.  analyze writes a predictions
JSON, verify a full report JSON plus one trajectory CSV per simulated row,
spectrum an eigenvalue/eigenvector CSV pair.  Outputs are byte-identical
for identical config and seed.

Exit codes: 0 success; 1 verify found a refuted prediction; 2 config error;
3 numerical failure (singular step matrix); 4 spectrum on a non-symmetric
scenario.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import analyzer, semigroup as sg
from .forms import Scenario, assemble, build_mesh, form_diagnostics
from .lattice import Subspace, make_subspace

EXIT_OK = 0
EXIT_REFUTED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_NOT_SYMMETRIC = 4

PROPERTY_CHOICES = ("positivity", "linf_contraction", "irreducibility",
                    "stability", "scalar_domination")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    scenario: Scenario
    sim: analyzer.SimConfig
    properties: tuple = ("positivity", "linf_contraction", "irreducibility",
                         "stability")
    dominated_by: list = field(default_factory=list)  # Scenario list
    subspaces: list = field(default_factory=list)     # Subspace list


def _parse_subspace(raw, m: int, where: str) -> Subspace:
    if isinstance(raw, str):
        if raw == "full":
            return Subspace.full(m)
        if raw == "zero":
            return Subspace.zero(m)
        raise ConfigError(f"{where}: subspace must be 'full', 'zero', or a "
                          f"list of generator rows, got {raw!r}")
    try:
        gens = [np.asarray(row, dtype=float) for row in raw]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: bad generator rows ({exc})") from exc
    if not gens:
        return Subspace.zero(m)
    if any(g.shape != (m,) for g in gens):
        raise ConfigError(f"{where}: generator rows must have length {m}")
    return make_subspace(gens, ambient_dim=m)


def _parse_matrix(raw, m: int, where: str) -> np.ndarray:
    try:
        mat = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: bad matrix ({exc})") from exc
    if mat.shape == () and m == 1:
        mat = mat.reshape(1, 1)
    if mat.shape != (m, m):
        raise ConfigError(f"{where}: expected a {m}x{m} matrix, got shape "
                          f"{mat.shape}")
    return mat


def _parse_scenario(table: dict) -> Scenario:
    if "preset" in table:
        name = table["preset"]
        m = table.get("m")
        if not isinstance(m, int) or m < 1:
            raise ConfigError("scenario.m: positive integer required for "
                              "presets")
        try:
            return analyzer.preset(name, m, rho=float(table.get("rho", 1.0)))
        except ValueError as exc:
            raise ConfigError(f"scenario.preset: {exc}") from exc
    m = table.get("m")
    if not isinstance(m, int) or m < 1:
        raise ConfigError("scenario.m: positive integer required")
    left = table.get("left", {})
    right = table.get("right", {})
    diffusion = table.get("diffusion", 1.0)
    if isinstance(diffusion, list):
        diffusion = _parse_matrix(diffusion, m, "scenario.diffusion")
    potential = table.get("potential")
    if isinstance(potential, list):
        potential = _parse_matrix(potential, m, "scenario.potential")
    return Scenario(
        m=m,
        diffusion=diffusion,
        s_left=_parse_matrix(left.get("s", np.zeros((m, m))), m,
                             "scenario.left.s"),
        s_right=_parse_matrix(right.get("s", np.zeros((m, m))), m,
                              "scenario.right.s"),
        y_left=_parse_subspace(left.get("y", "full"), m, "scenario.left.y"),
        y_right=_parse_subspace(right.get("y", "full"), m,
                                "scenario.right.y"),
        potential=potential,
        gamma=float(table.get("gamma", 1.0)),
        name=str(table.get("name", "custom")),
    )


def load_config(path: str, overrides: argparse.Namespace) -> RunConfig:
    """Parse a TOML run configuration, applying command-line overrides."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error in {path}: {exc}") from exc
    if "scenario" not in raw:
        raise ConfigError("missing [scenario] table")
    scenario = _parse_scenario(raw["scenario"])

    simtab = raw.get("simulation", {})
    sim = analyzer.SimConfig()
    numeric_fields = {
        "n_elements": ("n", int), "dt": ("dt", float),
        "t_end": ("t_end", float), "n_random": ("n_random", int),
        "witness_n_random": ("witness_n_random", int), "seed": ("seed", int),
        "tol": ("tol", float), "decay_dt": ("decay_dt", float),
        "decay_t_end": ("decay_t_end", float),
    }
    for key, (attr, conv) in numeric_fields.items():
        if key in simtab:
            try:
                setattr(sim, attr, conv(simtab[key]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"simulation.{key}: {exc}") from exc
    for key in ("scheme", "mass"):
        if key in simtab:
            setattr(sim, key, str(simtab[key]))
    if sim.scheme not in sg.SCHEMES:
        raise ConfigError(f"simulation.scheme must be one of {sg.SCHEMES}")
    if sim.mass not in sg.MASSES:
        raise ConfigError(f"simulation.mass must be one of {sg.MASSES}")

    targets_tab = raw.get("targets", {})
    properties = tuple(targets_tab.get("properties",
                                       ("positivity", "linf_contraction",
                                        "irreducibility", "stability")))
    for prop in properties:
        if prop not in PROPERTY_CHOICES:
            raise ConfigError(f"targets.properties: unknown property "
                              f"{prop!r} (choices: {PROPERTY_CHOICES})")
    dominated_by = [
        _parse_scenario(tab)
        for tab in targets_tab.get("dominated_by", [])
    ]
    subspaces = [
        _parse_subspace(raw, scenario.m, "targets.subspaces")
        for raw in targets_tab.get("subspaces", [])
    ]

    for attr in ("seed", "dt", "t_end"):
        value = getattr(overrides, attr, None)
        if value is not None:
            setattr(sim, attr, value)
    if getattr(overrides, "n_elements", None) is not None:
        sim.n = overrides.n_elements

    # numeric sanity
    if sim.n < 2:
        raise ConfigError("simulation.n_elements must be at least 2")
    for name in ("dt", "t_end", "tol", "decay_dt", "decay_t_end"):
        value = getattr(sim, name)
        if value is not None and value <= 0:
            raise ConfigError(f"simulation.{name} must be positive")
    return RunConfig(scenario=scenario, sim=sim, properties=properties,
                     dominated_by=dominated_by, subspaces=subspaces)


def build_targets(config: RunConfig):
    m = config.scenario.m
    out = []
    for prop in config.properties:
        if prop == "positivity":
            out.append(analyzer.positivity_target(m))
        elif prop == "linf_contraction":
            out.append(analyzer.linf_target(m))
        elif prop == "irreducibility":
            out.append(analyzer.IrreducibilityTarget())
        elif prop == "stability":
            out.append(analyzer.StabilityTarget())
        elif prop == "scalar_domination":
            out.append(analyzer.ScalarDominationTarget())
    for sub in config.subspaces:
        out.append(analyzer.SubspaceTarget(sub))
    for other in config.dominated_by:
        out.append(analyzer.DominationTarget(other))
    return out


# ---------------------------------------------------------------------------
# writers


def _write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n")


def _write_trajectory_csv(path: Path, traj: sg.Trajectory):
    nodes = traj.form.mesh.nodes
    vals = traj.nodal()
    with open(path, "w") as fh:
        fh.write("t,node_x,component,value\n")
        for ti, t in enumerate(traj.times):
            for ni, x in enumerate(nodes):
                for c in range(traj.form.m):
                    fh.write(f"{float(t)!r},{float(x)!r},{c},"
                             f"{float(vals[ti, ni, c])!r}\n")


def _predictions_payload(config: RunConfig, predictions) -> dict:
    return {
        "format_version": "1",
        "kind": "predictions",
        "scenario": config.scenario.summary(),
        "config": config.sim.to_dict(),
        "predictions": [p.to_dict() for p in predictions],
    }


# ---------------------------------------------------------------------------
# subcommands


def cmd_analyze(args) -> int:
    try:
        config = load_config(args.config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    predictions = analyzer.predict(config.scenario, build_targets(config))
    out = Path(args.out)
    _write_json(out / "predictions.json",
                _predictions_payload(config, predictions))
    for pred in predictions:
        print(f"{pred.property}: predicted={pred.predicted} ({pred.mode})")
    return EXIT_OK


def _apply_prediction_file(predictions, path: str):
    """Override predicted values from a hand-edited predictions JSON
    (rows matched by property name, in order)."""
    with open(path) as fh:
        data = json.load(fh)
    rows = data.get("predictions", [])
    by_property = {}
    for row in rows:
        by_property.setdefault(row["property"], []).append(row)
    for pred in predictions:
        queue = by_property.get(pred.property)
        if queue:
            row = queue.pop(0)
            pred.predicted = row.get("predicted", pred.predicted)
            if pred.predicted is not None and pred.mode == "inapplicable":
                pred.mode = "necessary_only"
    return predictions


def cmd_verify(args) -> int:
    try:
        config = load_config(args.config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    predictions = analyzer.predict(config.scenario, build_targets(config))
    if args.predictions:
        try:
            predictions = _apply_prediction_file(predictions,
                                                 args.predictions)
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            print(f"config error: bad predictions file: {exc}",
                  file=sys.stderr)
            return EXIT_CONFIG
    try:
        report = analyzer.verify(config.scenario, predictions, config.sim)
    except sg.SingularOperatorError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for row in report.rows:
        if (row.observation is not None
                and "error" in row.observation.evidence):
            err = row.observation.evidence["error"]
            if "SingularOperatorError" in err:
                print(f"numerical failure: {err}", file=sys.stderr)
                return EXIT_NUMERICAL
    out = Path(args.out)
    _write_json(out / "report.json", report.to_dict())
    for idx, row in enumerate(report.rows):
        if row.trajectory is not None:
            name = f"trajectory_{idx:02d}_{row.prediction.property}.csv"
            _write_trajectory_csv(out / name, row.trajectory)
        print(f"{row.prediction.property}: predicted="
              f"{row.prediction.predicted} verdict={row.verdict}")
    return EXIT_REFUTED if report.has_refutation() else EXIT_OK


def cmd_spectrum(args) -> int:
    try:
        config = load_config(args.config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    mesh = build_mesh(config.sim.n)
    form = assemble(config.scenario, mesh)
    if not form_diagnostics(form).symmetric:
        print("spectrum requires a symmetric scenario", file=sys.stderr)
        return EXIT_NOT_SYMMETRIC
    try:
        pairs = sg.eigenpairs(form, args.k, mass=config.sim.mass)
    except sg.SingularOperatorError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "eigenvalues.csv", "w") as fh:
        fh.write("index,eigenvalue\n")
        for i, (lam, _) in enumerate(pairs):
            fh.write(f"{i},{float(lam)!r}\n")
            print(f"lambda_{i} = {lam:.8g}")
    with open(out / "eigenvectors.csv", "w") as fh:
        header = ",".join(f"vec_{i}" for i in range(len(pairs)))
        fh.write(f"node_x,component,{header}\n")
        fields = [form.nodal(vec) for _, vec in pairs]
        for ni, x in enumerate(mesh.nodes):
            for c in range(form.m):
                row = ",".join(repr(float(f[ni, c])) for f in fields)
                fh.write(f"{float(x)!r},{c},{row}\n")
    return EXIT_OK


def cmd_presets(args) -> int:
    m = args.m
    payload = {}
    for name in analyzer.PRESET_NAMES:
        scenario = analyzer.preset(name, m)
        payload[name] = {
            "m": m,
            "y_left_projection": np.round(
                scenario.y_left.projection, 12).tolist(),
            "y_right_projection": np.round(
                scenario.y_right.projection, 12).tolist(),
            "s_left": scenario.s_left.tolist(),
            "s_right": scenario.s_right.tolist(),
        }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coupledheat",
        description="coupled-boundary vector diffusion: analyze, simulate "
                    "and cross-check qualitative properties")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="TOML run config")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--n-elements", type=int, default=None)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--t-end", dest="t_end", type=float, default=None)

    p_analyze = sub.add_parser("analyze", help="write predictions JSON")
    add_common(p_analyze)
    p_analyze.set_defaults(func=cmd_analyze)

    p_verify = sub.add_parser("verify",
                              help="predictions + simulation report")
    add_common(p_verify)
    p_verify.add_argument("--predictions", default=None,
                          help="use predicted values from this JSON file")
    p_verify.set_defaults(func=cmd_verify)

    p_spec = sub.add_parser("spectrum", help="eigenvalues and eigenvectors")
    add_common(p_spec)
    p_spec.add_argument("-k", type=int, default=6,
                        help="number of eigenpairs")
    p_spec.set_defaults(func=cmd_spectrum)

    p_presets = sub.add_parser("presets", help="list preset scenarios")
    p_presets.add_argument("--m", type=int, default=2)
    p_presets.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
