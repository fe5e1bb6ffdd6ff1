"""Time integration of M u' = -A u and trajectory observers.

The qualitative observers (positivity, box/interval invariance, subspace
invariance, domination) are asserted for implicit Euler with lumped mass,
which inherits the discrete maximum principle of the P1 chain;
Crank-Nicolson is available for accuracy studies.  Ensemble sweeps step a
whole batch of initial data through one factorized solve per time step and
stream the property checks without storing the batch trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .forms import DiscreteForm, form_diagnostics, generalized_eigenpairs
from .lattice import OrderInterval, Subspace

POSITIVITY = "positivity"
LINF_CONTRACTION = "linf_contraction"
SUBSPACE_INVARIANCE = "subspace_invariance"
INTERVAL_INVARIANCE = "interval_invariance"
DOMINATION = "domination"
SCALAR_DOMINATION = "scalar_domination"
DECAY = "decay"
IRREDUCIBILITY = "irreducibility"

SCHEMES = ("implicit_euler", "crank_nicolson")
MASSES = ("lumped", "consistent")

DEFAULT_TOL = 1e-9


class SingularOperatorError(RuntimeError):
    """The step matrix M + theta dt A could not be factorized."""


@dataclass
class PropertyObservation:
    """Outcome of one trajectory observer.

    ``holds`` is equivalent to ``worst_violation <= tol``; the witness, when
    present, is the first offending sample as (time, node, component).
    """

    property: str
    holds: bool
    worst_violation: float
    witness: tuple | None
    tol: float
    evidence: dict = field(default_factory=dict)


@dataclass
class Trajectory:
    """Discrete evolution in constrained coordinates.

    times[0] = 0 and states[0] is the constrained projection of the initial
    datum; states has shape (T, N_c).
    """

    times: np.ndarray
    states: np.ndarray
    form: DiscreteForm
    scheme: str
    mass: str

    def nodal(self) -> np.ndarray:
        """States as nodal fields, shape (T, n_nodes, m)."""
        flat = self.form.constraint @ self.states.T  # (N, T)
        return flat.T.reshape(len(self.times), self.form.n_nodes, self.form.m)

    def norms(self) -> np.ndarray:
        """Lumped L2 norm of every stored state."""
        m_c = self.form.mass("lumped")
        return np.sqrt(np.einsum("tj,j,tj->t", self.states, m_c, self.states))


class _Stepper:
    """One-time factorization of the step matrix; step() advances a state
    vector or a whole (N_c, k) batch."""

    def __init__(self, form: DiscreteForm, dt: float, scheme: str, mass: str):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}")
        if mass not in MASSES:
            raise ValueError(f"unknown mass {mass!r}")
        if dt <= 0:
            raise ValueError("dt must be positive")
        a_c = form.operator()
        if mass == "lumped":
            m_op = sp.diags(form.mass("lumped"))
        else:
            m_op = form.mass("consistent")
        theta = 1.0 if scheme == "implicit_euler" else 0.5
        left = (m_op + theta * dt * a_c).tocsc()
        try:
            self._lu = spla.splu(left)
        except RuntimeError as exc:
            raise SingularOperatorError(
                f"singular step matrix ({exc})") from exc
        pivots = np.abs(self._lu.U.diagonal())
        if pivots.min() <= 1e-14 * max(pivots.max(), 1e-300):
            raise SingularOperatorError(
                f"singular step matrix (smallest pivot {pivots.min():.3e})")
        if theta < 1.0:
            self._right = (m_op - (1.0 - theta) * dt * a_c).tocsr()
        else:
            self._right = m_op.tocsr()

    def step(self, u: np.ndarray) -> np.ndarray:
        return self._lu.solve(self._right @ u)


def _n_steps(dt: float, t_end: float) -> int:
    if t_end < dt:
        raise ValueError("t_end must be at least dt")
    return max(int(round(t_end / dt)), 1)


def evolve(form: DiscreteForm, u0, dt: float, t_end: float,
           scheme: str = "implicit_euler", mass: str = "lumped") -> Trajectory:
    """Integrate M u' = -A u from a nodal initial datum.

    u0 is a nodal field of shape (n_nodes, m) or flat (N,); it is projected
    into the constrained space before stepping.  Each step solves
    (M + theta dt A) u+ = (M - (1-theta) dt A) u with a factorization
    computed once and reused.
    """
    stepper = _Stepper(form, dt, scheme, mass)
    steps = _n_steps(dt, t_end)
    u = form.constrain(u0)
    states = np.empty((steps + 1, u.size))
    states[0] = u
    for k in range(steps):
        u = stepper.step(u)
        states[k + 1] = u
    times = dt * np.arange(steps + 1)
    return Trajectory(times=times, states=states, form=form,
                      scheme=scheme, mass=mass)


def eigenpairs(form: DiscreteForm, k: int, mass: str = "lumped"):
    """k smallest generalized eigenpairs of the symmetric problem
    A v = lambda M v, ascending, with M-orthonormal vectors.

    Non-symmetric scenarios are rejected (use evolve instead).
    """
    if not form_diagnostics(form).symmetric:
        raise ValueError("eigenpairs requires a symmetric scenario")
    lam, vec = generalized_eigenpairs(form, k, mass)
    return [(float(lam[i]), vec[:, i].copy()) for i in range(lam.size)]


# ---------------------------------------------------------------------------
# observers on stored trajectories


def _interval_property_name(interval: OrderInterval) -> str:
    if interval.is_nonnegative_orthant():
        return POSITIVITY
    if interval.is_symmetric_box():
        return LINF_CONTRACTION
    return INTERVAL_INVARIANCE


def _interval_margins(vals: np.ndarray, interval: OrderInterval) -> np.ndarray:
    under = interval.lower - vals
    over = vals - interval.upper
    worst = np.maximum(np.maximum(under, over), 0.0)
    return np.where(np.isnan(worst), 0.0, worst)


def observe(traj: Trajectory, target, tol: float = DEFAULT_TOL,
            property_name: str | None = None) -> PropertyObservation:
    """Check a pointwise set constraint along a stored trajectory.

    ``target`` is an OrderInterval (nodal values must stay inside) or a
    Subspace (relative off-subspace residual must stay below tol).  The
    witness is the first violating (time, node, component).
    """
    vals = traj.nodal()
    if isinstance(target, OrderInterval):
        name = property_name or _interval_property_name(target)
        margins = _interval_margins(vals, target)
        worst = float(margins.max())
        witness = None
        if worst > tol:
            t, node, comp = np.argwhere(margins > tol)[0]
            witness = (float(traj.times[t]), int(node), int(comp))
        return PropertyObservation(name, worst <= tol, worst, witness, tol)
    if isinstance(target, Subspace):
        name = property_name or SUBSPACE_INVARIANCE
        resid = vals - vals @ target.projection.T
        rnorm = np.linalg.norm(resid, axis=2)
        unorm = np.linalg.norm(vals, axis=2)
        rel = np.where(unorm > 1e-300, rnorm / np.maximum(unorm, 1e-300), 0.0)
        worst = float(rel.max())
        witness = None
        if worst > tol:
            t, node = np.argwhere(rel > tol)[0]
            comp = int(np.abs(resid[t, node]).argmax())
            witness = (float(traj.times[t]), int(node), comp)
        return PropertyObservation(name, worst <= tol, worst, witness, tol)
    raise TypeError(f"unsupported observation target {type(target)!r}")


def _require_matched(traj1: Trajectory, traj2: Trajectory):
    if traj1.times.shape != traj2.times.shape or not np.allclose(
            traj1.times, traj2.times, atol=1e-12, rtol=0):
        raise ValueError("trajectories have mismatched time grids")
    if traj1.form.n_nodes != traj2.form.n_nodes:
        raise ValueError("trajectories have mismatched meshes")


def check_domination(traj1: Trajectory, traj2: Trajectory,
                     tol: float = DEFAULT_TOL) -> PropertyObservation:
    """Verify |u1(t, node, comp)| <= u2(t, node, comp) + tol at all samples;
    traj2 must have been evolved from |u0| of traj1 on a matched grid."""
    _require_matched(traj1, traj2)
    if traj1.form.m != traj2.form.m:
        raise ValueError("trajectories have mismatched state dimensions")
    gap = np.abs(traj1.nodal()) - traj2.nodal()
    worst = float(gap.max())
    witness = None
    if worst > tol:
        t, node, comp = np.argwhere(gap > tol)[0]
        witness = (float(traj1.times[t]), int(node), int(comp))
    return PropertyObservation(DOMINATION, worst <= tol, max(worst, 0.0),
                               witness, tol)


def _tensor_coefficients(form: DiscreteForm, tol: float = 1e-12):
    """(d_e, s) for a scenario of tensor form D = d (x) I, S = s (x) I with
    full boundary spaces; raises ValueError otherwise."""
    scenario = form.scenario
    m = scenario.m
    if scenario.y_left.dim != m or scenario.y_right.dim != m:
        raise ValueError("scalar domination needs Y = W at both endpoints")
    d_elem = scenario.resolve_diffusion(form.mesh)
    d_scal = np.trace(d_elem, axis1=1, axis2=2) / m
    if np.abs(d_elem - d_scal[:, None, None] * np.eye(m)).max() > tol * (
            1.0 + np.abs(d_elem).max()):
        raise ValueError("diffusion coefficient is not of tensor form d (x) I")
    s_vals = []
    for s in (scenario.s_left, scenario.s_right):
        s_scal = np.trace(s) / m
        if np.abs(s - s_scal * np.eye(m)).max() > tol * (1.0 + np.abs(s).max()):
            raise ValueError("boundary operator is not of tensor form s (x) I")
        s_vals.append(s_scal)
    return d_scal, tuple(s_vals)


def check_scalar_domination(vec_traj: Trajectory, scalar_traj: Trajectory,
                            tol: float = DEFAULT_TOL) -> PropertyObservation:
    """Verify || u(t, node) ||_W <= v(t, node) + tol for a tensor-form vector
    scenario against the scalar evolution of the pointwise norm of u0."""
    _require_matched(vec_traj, scalar_traj)
    if scalar_traj.form.m != 1:
        raise ValueError("comparison trajectory must be scalar (m = 1)")
    d_vec, s_vec = _tensor_coefficients(vec_traj.form)
    d_scal = scalar_traj.form.scenario.resolve_diffusion(scalar_traj.form.mesh)
    r_scal = (float(scalar_traj.form.scenario.s_left[0, 0]),
              float(scalar_traj.form.scenario.s_right[0, 0]))
    if np.abs(d_scal[:, 0, 0] - d_vec).max() > 1e-12 * (1 + np.abs(d_vec).max()):
        raise ValueError("scalar form does not match the vector diffusion")
    if not np.allclose(r_scal, s_vec, atol=1e-12):
        raise ValueError("scalar boundary coefficient must equal s")
    norms = np.linalg.norm(vec_traj.nodal(), axis=2)
    gap = norms - scalar_traj.nodal()[:, :, 0]
    worst = float(gap.max())
    witness = None
    if worst > tol:
        t, node = np.argwhere(gap > tol)[0]
        witness = (float(vec_traj.times[t]), int(node), -1)
    return PropertyObservation(SCALAR_DOMINATION, worst <= tol,
                               max(worst, 0.0), witness, tol)


def decay_rate(traj: Trajectory) -> float:
    """Exponential decay rate fitted to log ||u(t)|| over the last half of
    the time window (positive = decay).  Norm values below 1e-14 are
    truncated away before fitting."""
    norms = traj.norms()
    times = traj.times
    keep = norms > 1e-14
    half = times >= times[-1] / 2.0
    mask = keep & half
    if mask.sum() < 2:
        mask = keep
    if mask.sum() < 2:
        raise ValueError("trajectory norm underflowed, no fit window")
    slope = np.polyfit(times[mask], np.log(norms[mask]), 1)[0]
    return float(-slope)


# ---------------------------------------------------------------------------
# ensemble sweeps (streamed, batched solves)


def _as_batch(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    if arr.ndim != 3:
        raise ValueError("initial data must have shape (k, n_nodes, m)")
    return arr


def _constrain_batch(form: DiscreteForm, data: np.ndarray) -> np.ndarray:
    k = data.shape[0]
    flat = data.reshape(k, -1).T  # (N, k)
    return form.constraint.T @ flat  # (N_c, k)


def _batch_interval_margins(vals: np.ndarray,
                            interval: OrderInterval) -> np.ndarray:
    # vals has shape (nodes, m, k); bounds broadcast over nodes and batch
    under = interval.lower[None, :, None] - vals
    over = vals - interval.upper[None, :, None]
    worst = np.maximum(np.maximum(under, over), 0.0)
    return np.where(np.isnan(worst), 0.0, worst)


def sweep_interval(form: DiscreteForm, data, interval: OrderInterval,
                   dt: float, t_end: float, scheme: str = "implicit_euler",
                   mass: str = "lumped", tol: float = DEFAULT_TOL,
                   property_name: str | None = None) -> PropertyObservation:
    """Stream an ensemble of initial data through the evolution and record
    the worst excursion outside of the interval (including the projected
    state at t = 0).  evidence['datum'] indexes the offending field."""
    data = _as_batch(data)
    stepper = _Stepper(form, dt, scheme, mass)
    u = _constrain_batch(form, data)
    name = property_name or _interval_property_name(interval)
    steps = _n_steps(dt, t_end)
    worst = 0.0
    witness = None
    for k in range(steps + 1):
        vals = form.nodal(u)  # (nodes, m, batch)
        margins = _batch_interval_margins(vals, interval)
        local = float(margins.max())
        if local > worst:
            worst = local
            if local > tol and witness is None:
                node, comp, b = np.unravel_index(margins.argmax(),
                                                 margins.shape)
                witness = (k * dt, int(node), int(comp))
                witness_datum = int(b)
        if k < steps:
            u = stepper.step(u)
    evidence = {"n_data": int(data.shape[0])}
    if witness is not None:
        evidence["datum"] = witness_datum
    return PropertyObservation(name, worst <= tol, worst, witness, tol,
                               evidence)


def sweep_subspace(form: DiscreteForm, data, subspace: Subspace,
                   dt: float, t_end: float, scheme: str = "implicit_euler",
                   mass: str = "lumped",
                   tol: float = DEFAULT_TOL) -> PropertyObservation:
    """Relative off-subspace residual of an ensemble along the evolution."""
    data = _as_batch(data)
    stepper = _Stepper(form, dt, scheme, mass)
    u = _constrain_batch(form, data)
    steps = _n_steps(dt, t_end)
    proj = subspace.projection
    worst = 0.0
    witness = None
    for k in range(steps + 1):
        vals = form.nodal(u)  # (nodes, m, batch)
        resid = vals - np.einsum("ij,njb->nib", proj, vals)
        rnorm = np.linalg.norm(resid, axis=1)
        unorm = np.linalg.norm(vals, axis=1)
        rel = np.where(unorm > 1e-300, rnorm / np.maximum(unorm, 1e-300), 0.0)
        local = float(rel.max())
        if local > worst:
            worst = local
            if local > tol and witness is None:
                node, b = np.unravel_index(rel.argmax(), rel.shape)
                comp = int(np.abs(resid[node, :, b]).argmax())
                witness = (k * dt, int(node), comp)
                witness_datum = int(b)
        if k < steps:
            u = stepper.step(u)
    evidence = {"n_data": int(data.shape[0])}
    if witness is not None:
        evidence["datum"] = witness_datum
    return PropertyObservation(SUBSPACE_INVARIANCE, worst <= tol, worst,
                               witness, tol, evidence)


def sweep_domination(form1: DiscreteForm, form2: DiscreteForm, data,
                     dt: float, t_end: float,
                     scheme: str = "implicit_euler", mass: str = "lumped",
                     tol: float = DEFAULT_TOL) -> PropertyObservation:
    """Evolve each datum under form1 and its absolute value under form2 in
    lockstep; record the worst excess of |u1| over u2."""
    data = _as_batch(data)
    if form1.n_nodes != form2.n_nodes or form1.m != form2.m:
        raise ValueError("domination sweep needs matched meshes and m")
    stepper1 = _Stepper(form1, dt, scheme, mass)
    stepper2 = _Stepper(form2, dt, scheme, mass)
    u1 = _constrain_batch(form1, data)
    u2 = _constrain_batch(form2, np.abs(data))
    steps = _n_steps(dt, t_end)
    worst = 0.0
    witness = None
    for k in range(steps + 1):
        gap = np.abs(form1.nodal(u1)) - form2.nodal(u2)
        local = float(gap.max())
        if local > worst:
            worst = local
            if local > tol and witness is None:
                node, comp, b = np.unravel_index(gap.argmax(), gap.shape)
                witness = (k * dt, int(node), int(comp))
                witness_datum = int(b)
        if k < steps:
            u1 = stepper1.step(u1)
            u2 = stepper2.step(u2)
    evidence = {"n_data": int(data.shape[0])}
    if witness is not None:
        evidence["datum"] = witness_datum
    return PropertyObservation(DOMINATION, worst <= tol, max(worst, 0.0),
                               witness, tol, evidence)


def sweep_scalar_domination(form_vec: DiscreteForm,
                            form_scalar: DiscreteForm, data,
                            dt: float, t_end: float,
                            scheme: str = "implicit_euler",
                            mass: str = "lumped",
                            tol: float = DEFAULT_TOL) -> PropertyObservation:
    """Evolve vector data and the scalar field of pointwise norms in
    lockstep; record the worst excess of ||u||_W over the scalar bound."""
    data = _as_batch(data)
    _tensor_coefficients(form_vec)
    if form_scalar.m != 1 or form_scalar.n_nodes != form_vec.n_nodes:
        raise ValueError("scalar comparison form must be scalar on the "
                         "same mesh")
    stepper_v = _Stepper(form_vec, dt, scheme, mass)
    stepper_s = _Stepper(form_scalar, dt, scheme, mass)
    u = _constrain_batch(form_vec, data)
    v = _constrain_batch(form_scalar,
                         np.linalg.norm(data, axis=2)[:, :, None])
    steps = _n_steps(dt, t_end)
    worst = 0.0
    witness = None
    for k in range(steps + 1):
        norms = np.linalg.norm(form_vec.nodal(u), axis=1)  # (nodes, batch)
        gap = norms - form_scalar.nodal(v)[:, 0, :]
        local = float(gap.max())
        if local > worst:
            worst = local
            if local > tol and witness is None:
                node, b = np.unravel_index(gap.argmax(), gap.shape)
                witness = (k * dt, int(node), -1)
                witness_datum = int(b)
        if k < steps:
            u = stepper_v.step(u)
            v = stepper_s.step(v)
    evidence = {"n_data": int(data.shape[0])}
    if witness is not None:
        evidence["datum"] = witness_datum
    return PropertyObservation(SCALAR_DOMINATION, worst <= tol,
                               max(worst, 0.0), witness, tol, evidence)


def component_reachability(form: DiscreteForm, dt: float, t_end: float,
                           scheme: str = "implicit_euler",
                           mass: str = "lumped",
                           thresh: float = 1e-6) -> np.ndarray:
    """Boolean (m, m) matrix: heat seeded in component i (an interior bump)
    produces a response above ``thresh`` in component j at some time."""
    m = form.m
    x = form.mesh.nodes
    bump = np.exp(-(((x - 0.5) / 0.15) ** 2))
    data = np.zeros((m, x.size, m))
    for i in range(m):
        data[i, :, i] = bump
    stepper = _Stepper(form, dt, scheme, mass)
    u = _constrain_batch(form, data)
    steps = _n_steps(dt, t_end)
    peak = np.zeros((m, m))
    for k in range(steps + 1):
        vals = np.abs(form.nodal(u))  # (nodes, m, seeds)
        peak = np.maximum(peak, vals.max(axis=0).T)  # (seeds, comps)
        if k < steps:
            u = stepper.step(u)
    return peak > thresh


# ---------------------------------------------------------------------------
# initial data generators


def random_fields(mesh, m: int, count: int, rng: np.random.Generator,
                  kind: str = "gaussian",
                  interval: OrderInterval | None = None) -> np.ndarray:
    """Random nodal fields of shape (count, n_nodes, m).

    kind 'gaussian' draws iid standard normals, 'nonnegative' uniform in
    [0, 1], and 'interval' samples pointwise inside the given interval."""
    nodes = mesh.nodes.size
    if kind == "gaussian":
        return rng.standard_normal((count, nodes, m))
    if kind == "nonnegative":
        return rng.random((count, nodes, m))
    if kind == "interval":
        if interval is None:
            raise ValueError("interval data needs an interval")
        return interval.sample(count * nodes, rng).reshape(count, nodes, m)
    raise ValueError(f"unknown field kind {kind!r}")


def structured_fields(mesh, m: int,
                      interval: OrderInterval | None = None,
                      max_vertices: int = 16) -> np.ndarray:
    """Extremal fields: boundary bumps and global profiles combined with
    the sign patterns (interval vertices) of the target set.

    Every returned field takes values inside ``interval`` when one is
    given (convex combinations of a vertex and the projected origin)."""
    x = mesh.nodes
    h = float(np.diff(x).min())
    profiles = [
        np.ones_like(x),
        np.exp(-((x / (4 * h)) ** 2)),
        np.exp(-(((1 - x) / (4 * h)) ** 2)),
        np.sin(np.pi * x) ** 2,
    ]
    if interval is None:
        interval = OrderInterval.symmetric_box(m)
    vertices = interval.finite_vertices(cap=max_vertices)
    anchor = interval.project(np.zeros(m))
    fields = []
    for v in vertices:
        for p in profiles:
            fields.append(p[:, None] * v[None, :]
                          + (1.0 - p)[:, None] * anchor[None, :])
    return np.array(fields)


def subspace_fields(mesh, subspace: Subspace, count: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Random fields with nodal values inside the subspace."""
    nodes = mesh.nodes.size
    k = subspace.dim
    if k == 0:
        return np.zeros((max(count, 1), nodes, subspace.dim_ambient))
    coeff = rng.standard_normal((count, nodes, k))
    return coeff @ subspace.basis.T
