"""Prediction engine for qualitative properties of coupled-boundary
diffusion, paired with simulation-based confirmation.

``predict`` evaluates algebraic criteria on the boundary projections and
coefficients (positivity, box/interval invariance, subspace invariance,
irreducibility, exponential stability, domination by another scenario, and
domination of the pointwise norm by a scalar problem).  ``verify`` runs the
corresponding trajectory observers: predicted-true rows are confirmed on
structured plus random initial data, predicted-false rows trigger a seeded
witness search.  A randomized search that finds nothing is reported as
"no_counterexample_found", never as a proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import semigroup as sg
from .forms import Scenario, assemble, build_mesh, form_diagnostics
from .lattice import (
    OrderInterval,
    Subspace,
    interval_invariant,
    is_ideal,
    joint_pattern_irreducible,
)

CRIT_TOL = 1e-10
#: smallest fitted decay rate still counted as exponential decay
RATE_FLOOR = 1e-2

MODE_BICONDITIONAL = "biconditional"
MODE_NECESSARY_ONLY = "necessary_only"
MODE_INAPPLICABLE = "inapplicable"

VERDICT_CONFIRMED = "confirmed"
VERDICT_REFUTED = "refuted_prediction"
VERDICT_NO_WITNESS = "no_counterexample_found"
VERDICT_INAPPLICABLE = "inapplicable"


# ---------------------------------------------------------------------------
# property targets


@dataclass(frozen=True)
class IntervalTarget:
    """Invariance of the set of fields with nodal values in an order
    interval; positivity and sup-norm contractivity are the two canonical
    instances."""
    interval: OrderInterval
    property: str = sg.INTERVAL_INVARIANCE


def positivity_target(m: int) -> IntervalTarget:
    return IntervalTarget(OrderInterval.nonnegative(m), sg.POSITIVITY)


def linf_target(m: int) -> IntervalTarget:
    return IntervalTarget(OrderInterval.symmetric_box(m), sg.LINF_CONTRACTION)


@dataclass(frozen=True)
class SubspaceTarget:
    subspace: Subspace
    property: str = sg.SUBSPACE_INVARIANCE


@dataclass(frozen=True)
class IrreducibilityTarget:
    property: str = sg.IRREDUCIBILITY


@dataclass(frozen=True)
class StabilityTarget:
    property: str = sg.DECAY


@dataclass(frozen=True)
class DominationTarget:
    """Is this scenario dominated by ``dominating``?"""
    dominating: Scenario
    property: str = sg.DOMINATION


@dataclass(frozen=True)
class ScalarDominationTarget:
    property: str = sg.SCALAR_DOMINATION


def default_targets(scenario: Scenario):
    m = scenario.m
    return [positivity_target(m), linf_target(m), IrreducibilityTarget(),
            StabilityTarget()]


# ---------------------------------------------------------------------------
# predictions


@dataclass
class Prediction:
    property: str
    predicted: bool | None
    mode: str
    criteria: list  # (name, bool) pairs
    params: dict = field(default_factory=dict)
    note: str = ""
    target: object = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "property": self.property,
            "predicted": self.predicted,
            "mode": self.mode,
            "criteria": [{"name": n, "passed": bool(p)}
                         for n, p in self.criteria],
            "params": self.params,
            "note": self.note,
        }


def _interval_params(interval: OrderInterval) -> dict:
    def enc(bound):
        return [None if not np.isfinite(v) else float(v) for v in bound]
    return {"interval": {"lower": enc(interval.lower),
                         "upper": enc(interval.upper)}}


def _coefficient_samples(coeff, m: int) -> np.ndarray:
    """Representative (k, m, m) samples of a coefficient (probe mesh for
    callables)."""
    if coeff is None:
        return np.zeros((1, m, m))
    if callable(coeff):
        probe = build_mesh(16)
        return np.array([np.asarray(coeff(x), dtype=float).reshape(m, m)
                         for x in probe.midpoints])
    arr = np.asarray(coeff, dtype=float)
    if arr.ndim == 0:
        return (float(arr) * np.eye(m))[None, :, :]
    if arr.ndim == 2:
        return arr[None, :, :]
    return arr


def _diagonal_part(mat: np.ndarray) -> np.ndarray:
    return np.diag(np.diag(mat))


def _is_diagonal(mat: np.ndarray, tol: float = CRIT_TOL) -> bool:
    return bool(np.abs(mat - _diagonal_part(mat)).max()
                <= tol * (1.0 + np.abs(mat).max()))


def _generator_leaves_interval(s: np.ndarray, interval: OrderInterval,
                               tol: float = CRIT_TOL):
    """Matrix criterion for exp(-tS) to leave the interval invariant.

    Zero S is trivial; the nonnegative orthant uses the classical
    biconditional (off-diagonal entries of S <= 0); symmetric boxes use the
    conservative test off-diagonals <= 0 and (radius-scaled) row sums of S
    >= 0.  Other intervals are not decided (returns None)."""
    scale = 1.0 + float(np.abs(s).max())
    if np.abs(s).max() <= tol:
        return True
    off = s - _diagonal_part(s)
    if interval.is_nonnegative_orthant():
        return bool(off.max() <= tol * scale)
    if interval.is_symmetric_box():
        r = interval.upper
        row_ok = np.all(s @ r >= -tol * scale * float(r.max()))
        return bool(off.max() <= tol * scale and row_ok)
    return None


def _predict_interval(scenario: Scenario, target: IntervalTarget) -> Prediction:
    interval = target.interval
    if interval.dim != scenario.m:
        raise ValueError("interval dimension does not match the scenario")
    crits = []
    d_samples = _coefficient_samples(scenario.diffusion, scenario.m)
    local = all(_is_diagonal(d) for d in d_samples)
    crits.append(("diffusion coefficient local (diagonal matrices)", local))
    contains_zero = interval.contains(np.zeros(scenario.m))
    crits.append(("interval contains 0", contains_zero))
    necessary = True
    s_known = True
    s_all = True
    for side, y, s in (("left", scenario.y_left, scenario.s_left),
                       ("right", scenario.y_right, scenario.s_right)):
        p_ok = interval_invariant(y.projection, interval, samples=0)
        crits.append((f"boundary projection leaves interval invariant "
                      f"({side})", p_ok))
        necessary = necessary and p_ok
        s_ok = _generator_leaves_interval(s, interval)
        if s_ok is None:
            s_known = False
            crits.append((f"exp(-tS) interval criterion undecided ({side})",
                          False))
        else:
            crits.append((f"exp(-tS) leaves interval invariant ({side})",
                          s_ok))
            s_all = s_all and s_ok

    note = ""
    if not contains_zero:
        predicted, mode = None, MODE_INAPPLICABLE
        note = "invariance theory requires 0 in the interval"
    elif not necessary:
        predicted = False
        mode = MODE_BICONDITIONAL if (local and s_known) else MODE_NECESSARY_ONLY
    elif not local:
        predicted, mode = None, MODE_NECESSARY_ONLY
        note = ("non-local diffusion: projection invariance is only "
                "necessary, no biconditional available")
    elif not s_known:
        predicted, mode = None, MODE_INAPPLICABLE
        note = "no matrix criterion implemented for exp(-tS) on this interval"
    else:
        predicted, mode = bool(s_all), MODE_BICONDITIONAL
    return Prediction(target.property, predicted, mode, crits,
                      _interval_params(interval), note, target)


def _predict_subspace(scenario: Scenario, target: SubspaceTarget) -> Prediction:
    c = target.subspace
    if c.dim_ambient != scenario.m:
        raise ValueError("subspace dimension does not match the scenario")
    m = scenario.m
    q = np.eye(m) - c.projection
    crits = []
    ok = True
    for side, y in (("left", scenario.y_left), ("right", scenario.y_right)):
        good = bool(np.abs(q @ y.projection @ c.projection).max() <= CRIT_TOL)
        crits.append((f"boundary projection leaves subspace invariant "
                      f"({side})", good))
        ok = ok and good
    d_samples = _coefficient_samples(scenario.diffusion, m)
    good = all(
        np.abs(q @ d @ c.projection).max() <= CRIT_TOL * (1 + np.abs(d).max())
        for d in d_samples)
    crits.append(("diffusion coefficient leaves subspace invariant", good))
    ok = ok and good
    for side, s in (("left", scenario.s_left), ("right", scenario.s_right)):
        good = bool(np.abs(q @ s @ c.projection).max()
                    <= CRIT_TOL * (1 + np.abs(s).max()))
        crits.append((f"boundary operator leaves subspace invariant "
                      f"({side})", good))
        ok = ok and good
    if scenario.potential is not None:
        c_samples = _coefficient_samples(scenario.potential, m)
        good = all(np.abs(q @ ce @ c.projection).max()
                   <= CRIT_TOL * (1 + np.abs(ce).max()) for ce in c_samples)
        crits.append(("potential leaves subspace invariant", good))
        ok = ok and good
    params = {"subspace_basis": c.basis.tolist()}
    return Prediction(target.property, bool(ok), MODE_BICONDITIONAL, crits,
                      params, "", target)


def _predict_irreducibility(scenario: Scenario,
                            target: IrreducibilityTarget) -> Prediction:
    m = scenario.m
    crits = []
    d_samples = _coefficient_samples(scenario.diffusion, m)
    d_diag = all(_is_diagonal(d) for d in d_samples)
    s_diag = _is_diagonal(scenario.s_left) and _is_diagonal(scenario.s_right)
    crits.append(("diffusion coefficient diagonal", d_diag))
    crits.append(("boundary operators diagonal", s_diag))
    connected = joint_pattern_irreducible(
        [scenario.y_left.projection, scenario.y_right.projection])
    crits.append(("pattern graph of the boundary projections connected",
                  connected))
    if not (d_diag and s_diag):
        return Prediction(target.property, None, MODE_INAPPLICABLE, crits,
                          {}, "criterion needs diagonal coefficients", target)
    return Prediction(target.property, bool(connected), MODE_BICONDITIONAL,
                      crits, {}, "", target)


def _sym(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.T)


def _psd(mat: np.ndarray, tol: float = CRIT_TOL) -> bool:
    if mat.size == 0:
        return True
    return bool(np.linalg.eigvalsh(_sym(mat)).min()
                >= -tol * (1.0 + np.abs(mat).max()))


def _predict_stability(scenario: Scenario,
                       target: StabilityTarget) -> Prediction:
    """Exponential stability through the constant-field kernel: the form
    vanishes exactly on constants lying in both boundary subspaces and in
    the kernels of the symmetrized boundary operators (and of the
    potential, when present).  Valid under accretivity."""
    m = scenario.m
    crits = []
    constraints = [np.eye(m) - scenario.y_left.projection,
                   np.eye(m) - scenario.y_right.projection]
    applicable = True
    for side, y, s in (("left", scenario.y_left, scenario.s_left),
                       ("right", scenario.y_right, scenario.s_right)):
        acc = _psd(y.projection @ _sym(s) @ y.projection)
        crits.append((f"boundary term accretive ({side})", acc))
        applicable = applicable and acc
        constraints.append(y.projection @ _sym(s) @ y.projection)
    if scenario.potential is not None:
        c_samples = _coefficient_samples(scenario.potential, m)
        pot_psd = all(_psd(ce) for ce in c_samples)
        crits.append(("potential positive semidefinite", pot_psd))
        applicable = applicable and pot_psd
        constraints.extend(_sym(ce) for ce in c_samples)
    stacked = np.vstack(constraints)
    svals = np.linalg.svd(stacked, compute_uv=False)
    rank = int(np.sum(svals > CRIT_TOL * max(1.0, float(svals[0])))
               ) if svals.size else 0
    kernel_dim = m - rank
    crits.append(("no constant field in the form kernel", kernel_dim == 0))
    params = {"constant_kernel_dim": kernel_dim}
    if not applicable:
        return Prediction(target.property, None, MODE_INAPPLICABLE, crits,
                          params,
                          "stability criterion assumes an accretive form",
                          target)
    return Prediction(target.property, bool(kernel_dim == 0),
                      MODE_BICONDITIONAL, crits, params, "", target)


def _coefficients_match(c1, c2, m: int) -> bool:
    a = _coefficient_samples(c1, m)
    b = _coefficient_samples(c2, m)
    if a.shape[0] != b.shape[0]:
        if a.shape[0] == 1:
            a = np.broadcast_to(a, b.shape)
        elif b.shape[0] == 1:
            b = np.broadcast_to(b, a.shape)
        else:
            return False
    return bool(np.abs(a - b).max() <= CRIT_TOL * (1.0 + np.abs(a).max()))


def _predict_domination(scenario: Scenario,
                        target: DominationTarget) -> Prediction:
    other = target.dominating
    if other.m != scenario.m:
        raise ValueError("domination partners must share the state dimension")
    crits = []
    pos_pred = _predict_interval(other, positivity_target(other.m))
    dominating_positive = pos_pred.predicted is True
    crits.append(("dominating scenario predicted positive",
                  dominating_positive))
    same_d = _coefficients_match(scenario.diffusion, other.diffusion,
                                 scenario.m)
    crits.append(("identical diffusion coefficients", same_d))
    ok = True
    for side, y1, s1, y2, s2 in (
            ("left", scenario.y_left, scenario.s_left,
             other.y_left, other.s_left),
            ("right", scenario.y_right, scenario.s_right,
             other.y_right, other.s_right)):
        acc1 = _psd(y1.basis.T @ _sym(s1) @ y1.basis)
        acc2 = _psd(y2.basis.T @ _sym(s2) @ y2.basis)
        crits.append((f"boundary operators positive on their subspaces "
                      f"({side})", acc1 and acc2))
        ideal = is_ideal(y1, y2)
        crits.append((f"boundary subspace closed ideal of dominating "
                      f"({side})", ideal))
        diff_psd = _psd(y1.basis.T @ (_sym(s1) - _sym(s2)) @ y1.basis)
        crits.append((f"dominated boundary operator at least the "
                      f"dominating one on the subspace ({side})", diff_psd))
        ok = ok and ideal and diff_psd and acc1 and acc2
    params = {"dominating": other.summary()}
    if not (dominating_positive and same_d):
        return Prediction(target.property, None, MODE_INAPPLICABLE, crits,
                          params,
                          "domination criterion needs a positive dominating "
                          "semigroup and shared diffusion", target)
    return Prediction(target.property, bool(ok), MODE_BICONDITIONAL, crits,
                      params, "", target)


def _predict_scalar_domination(scenario: Scenario,
                               target: ScalarDominationTarget) -> Prediction:
    m = scenario.m
    crits = []
    d_samples = _coefficient_samples(scenario.diffusion, m)
    d_iso = all(
        np.abs(d - (np.trace(d) / m) * np.eye(m)).max()
        <= CRIT_TOL * (1.0 + np.abs(d).max()) for d in d_samples)
    crits.append(("diffusion of tensor form d (x) identity", d_iso))
    s_iso = all(
        np.abs(s - (np.trace(s) / m) * np.eye(m)).max()
        <= CRIT_TOL * (1.0 + np.abs(s).max())
        for s in (scenario.s_left, scenario.s_right))
    crits.append(("boundary operators of tensor form s (x) identity", s_iso))
    full = scenario.y_left.dim == m and scenario.y_right.dim == m
    crits.append(("full boundary subspaces (Y = W)", full))
    no_pot = scenario.potential is None
    crits.append(("no potential term", no_pot))
    if not (d_iso and s_iso and full and no_pot):
        return Prediction(target.property, None, MODE_INAPPLICABLE, crits, {},
                          "scalar comparison needs the tensor form", target)
    return Prediction(target.property, True, MODE_BICONDITIONAL, crits, {},
                      "holds unconditionally under the tensor form", target)


_DISPATCH = {
    IntervalTarget: _predict_interval,
    SubspaceTarget: _predict_subspace,
    IrreducibilityTarget: _predict_irreducibility,
    StabilityTarget: _predict_stability,
    DominationTarget: _predict_domination,
    ScalarDominationTarget: _predict_scalar_domination,
}


def predict(scenario: Scenario, targets) -> list:
    """Evaluate the algebraic criteria for every requested target.

    Deterministic: identical scenarios produce identical criterion traces.
    Rows whose hypotheses fail are flagged inapplicable, never guessed.
    """
    out = []
    for target in targets:
        fn = _DISPATCH.get(type(target))
        if fn is None:
            raise TypeError(f"unknown target {target!r}")
        out.append(fn(scenario, target))
    return out


# ---------------------------------------------------------------------------
# verification


@dataclass
class SimConfig:
    """Simulation settings for the verification pipeline.

    dt defaults to h^2/2 (the positivity-safe implicit Euler step used for
    all property checks).  The seed fixes every randomized search.
    """

    n: int = 64
    dt: float | None = None
    t_end: float = 1.0
    scheme: str = "implicit_euler"
    mass: str = "lumped"
    n_random: int = 50
    witness_n_random: int = 200
    seed: int = 0
    tol: float = 1e-9
    decay_dt: float = 0.004
    decay_t_end: float = 3.0

    def resolved_dt(self, mesh) -> float:
        return self.dt if self.dt is not None else mesh.h_max ** 2 / 2.0

    def to_dict(self) -> dict:
        return {
            "n": self.n, "dt": self.dt, "t_end": self.t_end,
            "scheme": self.scheme, "mass": self.mass,
            "n_random": self.n_random,
            "witness_n_random": self.witness_n_random, "seed": self.seed,
            "tol": self.tol, "decay_dt": self.decay_dt,
            "decay_t_end": self.decay_t_end,
        }


@dataclass
class ReportRow:
    prediction: Prediction
    observation: sg.PropertyObservation | None
    verdict: str
    trajectory: sg.Trajectory | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        obs = None
        if self.observation is not None:
            worst = float(self.observation.worst_violation)
            obs = {
                "property": self.observation.property,
                "holds": bool(self.observation.holds),
                "worst_violation": worst if np.isfinite(worst) else None,
                "witness": list(self.observation.witness)
                if self.observation.witness is not None else None,
                "tol": float(self.observation.tol),
                "evidence": _json_safe(self.observation.evidence),
            }
        return {"prediction": self.prediction.to_dict(),
                "observation": obs, "verdict": self.verdict}


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


@dataclass
class Report:
    scenario: dict
    config: dict
    rows: list

    def verdict_counts(self) -> dict:
        counts = {}
        for row in self.rows:
            counts[row.verdict] = counts.get(row.verdict, 0) + 1
        return counts

    def has_refutation(self) -> bool:
        return any(row.verdict == VERDICT_REFUTED for row in self.rows)

    def to_dict(self) -> dict:
        return {
            "format_version": "1",
            "kind": "report",
            "scenario": self.scenario,
            "config": self.config,
            "summary": self.verdict_counts(),
            "rows": [row.to_dict() for row in self.rows],
        }


def _verdict(prediction: Prediction,
             observation: sg.PropertyObservation | None) -> str:
    if prediction.predicted is None or observation is None:
        return VERDICT_INAPPLICABLE
    if prediction.predicted:
        return VERDICT_CONFIRMED if observation.holds else VERDICT_REFUTED
    return VERDICT_CONFIRMED if not observation.holds else VERDICT_NO_WITNESS


def _axis_fields(mesh, m: int, interval: OrderInterval | None) -> np.ndarray:
    """Single-component bump fields +-e_i (kept only when both the pattern
    and 0 are admissible, so the whole field stays inside the interval)."""
    x = mesh.nodes
    h = float(np.diff(x).min())
    bump = np.maximum(np.exp(-((x / (6 * h)) ** 2)),
                      np.exp(-(((1 - x) / (6 * h)) ** 2)))
    center = np.exp(-(((x - 0.5) / 0.2) ** 2))
    fields = []
    admissible = interval is None or interval.violation(np.zeros(m)) == 0
    for i in range(m):
        for sign in (1.0, -1.0):
            v = sign * np.eye(m)[i]
            if interval is not None and (
                    not admissible or interval.violation(v) > 0):
                continue
            for prof in (bump, center):
                fields.append(prof[:, None] * v[None, :])
    if not fields:
        return np.zeros((0, x.size, m))
    return np.array(fields)


def _interval_data(form, interval, count, rng):
    mesh = form.mesh
    m = form.m
    parts = [sg.structured_fields(mesh, m, interval),
             _axis_fields(mesh, m, interval),
             sg.random_fields(mesh, m, count, rng, "interval", interval)]
    return np.concatenate([p for p in parts if p.size], axis=0)


def _verify_row(scenario: Scenario, prediction: Prediction, form,
                config: SimConfig, rng) -> ReportRow:
    mesh = form.mesh
    dt = config.resolved_dt(mesh)
    tol = config.tol
    target = prediction.target
    if prediction.predicted is None:
        return ReportRow(prediction, None, VERDICT_INAPPLICABLE)
    n_data = (config.n_random if prediction.predicted
              else config.witness_n_random)

    if isinstance(target, IntervalTarget):
        data = _interval_data(form, target.interval, n_data, rng)
        obs = sg.sweep_interval(form, data, target.interval, dt,
                                config.t_end, config.scheme, config.mass,
                                tol, prediction.property)
        traj_datum = obs.evidence.get("datum", 0)
        traj = sg.evolve(form, data[traj_datum], dt, config.t_end,
                         config.scheme, config.mass)
    elif isinstance(target, SubspaceTarget):
        data = sg.subspace_fields(mesh, target.subspace, n_data, rng)
        obs = sg.sweep_subspace(form, data, target.subspace, dt,
                                config.t_end, config.scheme, config.mass, tol)
        traj_datum = obs.evidence.get("datum", 0)
        traj = sg.evolve(form, data[traj_datum], dt, config.t_end,
                         config.scheme, config.mass)
    elif isinstance(target, IrreducibilityTarget):
        reached = sg.component_reachability(form, dt, config.t_end,
                                            config.scheme, config.mass)
        unreached = np.argwhere(~reached)
        holds = unreached.size == 0
        witness = None
        if not holds:
            witness = (config.t_end, int(unreached[0][0]),
                       int(unreached[0][1]))
        obs = sg.PropertyObservation(
            sg.IRREDUCIBILITY, holds, float(len(unreached)), witness, 0.0,
            {"reached": reached.tolist(),
             "witness_means": "(t_end, seed component, unreached component)"})
        bump = np.exp(-(((mesh.nodes - 0.5) / 0.15) ** 2))
        u0 = np.zeros((mesh.nodes.size, form.m))
        u0[:, 0] = bump
        traj = sg.evolve(form, u0, dt, config.t_end, config.scheme,
                         config.mass)
    elif isinstance(target, StabilityTarget):
        u0 = rng.standard_normal((mesh.nodes.size, form.m))
        traj = sg.evolve(form, u0, config.decay_dt, config.decay_t_end,
                         config.scheme, config.mass)
        rate = sg.decay_rate(traj)
        holds = rate >= RATE_FLOOR
        evidence = {"rate": rate, "rate_floor": RATE_FLOOR,
                    "discrete_kernel_dim": form_diagnostics(form).kernel_dim}
        obs = sg.PropertyObservation(sg.DECAY, holds,
                                     max(0.0, RATE_FLOOR - rate), None, 0.0,
                                     evidence)
    elif isinstance(target, DominationTarget):
        form2 = assemble(target.dominating, mesh)
        data = np.concatenate([
            sg.structured_fields(mesh, form.m,
                                 OrderInterval.symmetric_box(form.m)),
            _axis_fields(mesh, form.m, None),
            sg.random_fields(mesh, form.m, n_data, rng)], axis=0)
        obs = sg.sweep_domination(form, form2, data, dt, config.t_end,
                                  config.scheme, config.mass, tol)
        traj_datum = obs.evidence.get("datum", 0)
        traj = sg.evolve(form, data[traj_datum], dt, config.t_end,
                         config.scheme, config.mass)
    elif isinstance(target, ScalarDominationTarget):
        scalar = scalar_comparison_scenario(scenario)
        form_s = assemble(scalar, mesh)
        data = sg.random_fields(mesh, form.m, n_data, rng)
        obs = sg.sweep_scalar_domination(form, form_s, data, dt,
                                         config.t_end, config.scheme,
                                         config.mass, tol)
        traj_datum = obs.evidence.get("datum", 0)
        traj = sg.evolve(form, data[traj_datum], dt, config.t_end,
                         config.scheme, config.mass)
    else:
        raise TypeError(f"unknown target {target!r}")
    return ReportRow(prediction, obs, _verdict(prediction, obs), traj)


def verify(scenario: Scenario, predictions, config: SimConfig | None = None
           ) -> Report:
    """Run the observers matching each prediction and assemble the paired
    report; simulator errors in one row do not abort the others."""
    config = config or SimConfig()
    mesh = build_mesh(config.n)
    form = assemble(scenario, mesh)
    rows = []
    for idx, prediction in enumerate(predictions):
        rng = np.random.default_rng([config.seed, idx])
        try:
            rows.append(_verify_row(scenario, prediction, form, config, rng))
        except Exception as exc:  # propagate per row, keep the report
            obs = sg.PropertyObservation(prediction.property, False,
                                         float("nan"), None, config.tol,
                                         {"error": f"{type(exc).__name__}: {exc}"})
            rows.append(ReportRow(prediction, obs, VERDICT_INAPPLICABLE))
    return Report(scenario.summary(), config.to_dict(), rows)


def scalar_comparison_scenario(scenario: Scenario) -> Scenario:
    """Scalar Robin problem whose evolution bounds the pointwise norm of a
    tensor-form vector scenario (same d, boundary coefficient r = s)."""
    m = scenario.m
    d_samples = _coefficient_samples(scenario.diffusion, m)
    if d_samples.shape[0] == 1:
        diffusion = float(np.trace(d_samples[0]) / m)
    else:
        diffusion = (np.trace(d_samples, axis1=1, axis2=2) / m
                     ).reshape(-1, 1, 1)
    return Scenario(
        m=1,
        diffusion=diffusion,
        s_left=np.array([[np.trace(scenario.s_left) / m]]),
        s_right=np.array([[np.trace(scenario.s_right) / m]]),
        y_left=Subspace.full(1),
        y_right=Subspace.full(1),
        gamma=scenario.gamma,
        name=f"{scenario.name}-scalar-bound",
    )


# ---------------------------------------------------------------------------
# presets


PRESET_NAMES = ("dirichlet", "neumann", "robin", "kirchhoff",
                "anti_kirchhoff", "mixed_dn")


def preset(name: str, m: int, rho: float = 1.0) -> Scenario:
    """Named boundary-condition families on the unit interval with D = I.

    dirichlet: Y = {0}; neumann: Y = W, S = 0; robin: Y = W, S = rho I;
    kirchhoff: Y = span{1}, S = 0; anti_kirchhoff: Y = span{1}^perp;
    mixed_dn: Dirichlet left endpoint, Neumann right endpoint.
    """
    if m < 1:
        raise ValueError("state dimension must be at least 1")
    zero = np.zeros((m, m))
    if name == "dirichlet":
        y_l = y_r = Subspace.zero(m)
        s_l = s_r = zero
    elif name == "neumann":
        y_l = y_r = Subspace.full(m)
        s_l = s_r = zero
    elif name == "robin":
        y_l = y_r = Subspace.full(m)
        s_l = s_r = rho * np.eye(m)
    elif name == "kirchhoff":
        y_l = y_r = Subspace.span_of_ones(m)
        s_l = s_r = zero
    elif name == "anti_kirchhoff":
        y_l = y_r = Subspace.span_of_ones(m).complement()
        s_l = s_r = zero
    elif name == "mixed_dn":
        y_l, y_r = Subspace.zero(m), Subspace.full(m)
        s_l = s_r = zero
    else:
        raise ValueError(f"unknown preset {name!r}")
    label = name if name != "robin" else f"robin(rho={rho:g})"
    return Scenario(m=m, diffusion=1.0, s_left=s_l, s_right=s_r,
                    y_left=y_l, y_right=y_r, gamma=1.0, name=label)
