"""P1 Galerkin assembly of the coupled-boundary energy form on (0, 1).

The state takes values in W = R^m.  The energy of a field f is

    a(f, g) = int (D(x) f'(x) | g'(x)) dx + (S_0 f(0) | g(0)) + (S_1 f(1) | g(1))

on the constrained space of H^1 fields whose endpoint values lie in the
prescribed boundary subspaces Y_0, Y_1.  The trace operator is endpoint
nodal evaluation (exact for P1), and the constraint is realized by an
orthonormal basis of the admissible nodal vectors: identity blocks at
interior nodes, the Y-basis columns at the endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .lattice import Subspace

#: relative tolerance for the discrete symmetry / PSD diagnostics
DIAG_TOL = 1e-10


@dataclass(frozen=True)
class Mesh:
    """Partition of [0, 1] into intervals; nodes strictly increasing."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ValueError("mesh needs at least 2 elements")
        if abs(nodes[0]) > 0 or abs(nodes[-1] - 1.0) > 0:
            raise ValueError("mesh must span [0, 1]")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("mesh nodes must increase strictly")
        object.__setattr__(self, "nodes", nodes)

    @property
    def n_elements(self) -> int:
        return self.nodes.size - 1

    @property
    def element_sizes(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def h_max(self) -> float:
        return float(self.element_sizes.max())

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])


def build_mesh(n: int) -> Mesh:
    """Uniform mesh with n elements on [0, 1]; requires n >= 2."""
    if n < 2:
        raise ValueError("need at least 2 elements")
    return Mesh(np.linspace(0.0, 1.0, n + 1))


def _resolve_coefficient(coeff, m: int, mesh: Mesh) -> np.ndarray:
    """Per-element (n, m, m) array from a scalar, matrix, callable or array.

    Callables are sampled at element midpoints (piecewise-constant reading
    of a smooth coefficient)."""
    n = mesh.n_elements
    if callable(coeff):
        out = np.array([np.asarray(coeff(x), dtype=float).reshape(m, m)
                        for x in mesh.midpoints])
        return out
    arr = np.asarray(coeff, dtype=float)
    if arr.ndim == 0:
        return np.broadcast_to(float(arr) * np.eye(m), (n, m, m)).copy()
    if arr.shape == (m, m):
        return np.broadcast_to(arr, (n, m, m)).copy()
    if arr.shape == (n, m, m):
        return arr.copy()
    raise ValueError(f"coefficient shape {arr.shape} incompatible with "
                     f"m={m}, n={n}")


@dataclass
class Scenario:
    """Full problem description.

    diffusion and potential may each be a scalar, an (m, m) matrix, a
    callable x -> (m, m), or a per-element (n, m, m) array; s_left/s_right
    are (m, m) boundary operators and y_left/y_right the boundary
    subspaces.  gamma is the claimed ellipticity constant of the symmetric
    part of the diffusion coefficient.
    """

    m: int
    diffusion: object
    s_left: np.ndarray
    s_right: np.ndarray
    y_left: Subspace
    y_right: Subspace
    potential: object = None
    gamma: float = 1.0
    name: str = "custom"

    def __post_init__(self):
        self.s_left = np.asarray(self.s_left, dtype=float).reshape(self.m, self.m)
        self.s_right = np.asarray(self.s_right, dtype=float).reshape(self.m, self.m)
        for side, y in (("left", self.y_left), ("right", self.y_right)):
            if y.dim_ambient != self.m:
                raise ValueError(f"y_{side} lives in R^{y.dim_ambient}, "
                                 f"scenario has m={self.m}")
        if self.gamma <= 0:
            raise ValueError("ellipticity constant must be positive")

    def resolve_diffusion(self, mesh: Mesh) -> np.ndarray:
        return _resolve_coefficient(self.diffusion, self.m, mesh)

    def resolve_potential(self, mesh: Mesh):
        if self.potential is None:
            return None
        return _resolve_coefficient(self.potential, self.m, mesh)

    def summary(self) -> dict:
        """JSON-ready description (constant coefficients inlined)."""
        def coeff_repr(c):
            if c is None:
                return None
            if callable(c):
                return "callable"
            arr = np.asarray(c, dtype=float)
            return arr.tolist() if arr.ndim <= 2 else "per-element"

        return {
            "name": self.name,
            "m": self.m,
            "gamma": self.gamma,
            "diffusion": coeff_repr(self.diffusion),
            "potential": coeff_repr(self.potential),
            "s_left": self.s_left.tolist(),
            "s_right": self.s_right.tolist(),
            "y_left_basis": self.y_left.basis.tolist(),
            "y_right_basis": self.y_right.basis.tolist(),
        }


@dataclass(frozen=True)
class FormDiagnostics:
    elliptic: bool
    accretive: bool
    symmetric: bool
    kernel_dim: int


@dataclass
class DiscreteForm:
    """Assembled matrices in nodal block coordinates plus the constraint.

    stiffness/boundary/potential are N x N with N = (n+1) m; mass_lumped is
    the diagonal of the lumped mass matrix; constraint has orthonormal
    columns spanning the admissible nodal vectors (N x N_c).
    """

    mesh: Mesh
    scenario: Scenario
    stiffness: sp.csr_matrix
    boundary: sp.csr_matrix
    potential: sp.csr_matrix
    mass_lumped: np.ndarray
    mass_consistent: sp.csr_matrix
    constraint: sp.csr_matrix
    coefficient_min_eig: float
    coefficient_elliptic: bool
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def m(self) -> int:
        return self.scenario.m

    @property
    def n_nodes(self) -> int:
        return self.mesh.n_elements + 1

    @property
    def n_constrained(self) -> int:
        return self.constraint.shape[1]

    def operator(self) -> sp.csr_matrix:
        """Constrained operator C^T (K + B + V) C."""
        if "operator" not in self._cache:
            total = self.stiffness + self.boundary + self.potential
            self._cache["operator"] = (self.constraint.T @ total
                                       @ self.constraint).tocsr()
        return self._cache["operator"]

    def constrained_stiffness(self) -> sp.csr_matrix:
        if "stiffness_c" not in self._cache:
            self._cache["stiffness_c"] = (self.constraint.T @ self.stiffness
                                          @ self.constraint).tocsr()
        return self._cache["stiffness_c"]

    def mass(self, kind: str = "lumped"):
        """Constrained mass: 1-D diagonal for 'lumped', sparse for
        'consistent' (the lumped constrained mass stays diagonal because
        the constraint only mixes components within a node block)."""
        key = f"mass_{kind}"
        if key not in self._cache:
            if kind == "lumped":
                mc = (self.constraint.T
                      @ sp.diags(self.mass_lumped)
                      @ self.constraint).tocsr()
                self._cache[key] = np.asarray(mc.diagonal())
            elif kind == "consistent":
                self._cache[key] = (self.constraint.T @ self.mass_consistent
                                    @ self.constraint).tocsr()
            else:
                raise ValueError(f"unknown mass kind {kind!r}")
        return self._cache[key]

    def constrain(self, u_nodal: np.ndarray) -> np.ndarray:
        """Project a nodal field (n_nodes, m) or flat (N,) into constrained
        coordinates (nodewise orthogonal projection at the endpoints)."""
        flat = np.asarray(u_nodal, dtype=float).reshape(-1)
        return self.constraint.T @ flat

    def nodal(self, u_c: np.ndarray) -> np.ndarray:
        """Constrained coordinates back to nodal values.

        Accepts (N_c,) -> (n_nodes, m) or (N_c, k) -> (n_nodes, m, k)."""
        u_c = np.asarray(u_c, dtype=float)
        flat = self.constraint @ u_c
        if u_c.ndim == 1:
            return flat.reshape(self.n_nodes, self.m)
        return flat.reshape(self.n_nodes, self.m, -1)


def assemble(scenario: Scenario, mesh: Mesh) -> DiscreteForm:
    """Assemble the P1 matrices of the energy form for a scenario.

    Element contributions are (1/h) D_e kron [[1,-1],[-1,1]] for the
    stiffness, the boundary operators act on the endpoint node blocks, and
    both the lumped and the consistent mass are built.  A diffusion
    coefficient whose symmetric part dips below the claimed ellipticity
    constant is recorded as a diagnostic, not an error.
    """
    m = scenario.m
    n = mesh.n_elements
    big_n = (n + 1) * m
    d_elem = scenario.resolve_diffusion(mesh)
    c_elem = scenario.resolve_potential(mesh)
    h = mesh.element_sizes

    stiff = sp.lil_matrix((big_n, big_n))
    mass_c = sp.lil_matrix((big_n, big_n))
    mass_l = np.zeros(big_n)
    pot = sp.lil_matrix((big_n, big_n))
    eye = np.eye(m)
    for e in range(n):
        i, j = e * m, (e + 1) * m
        ke = d_elem[e] / h[e]
        stiff[i:i + m, i:i + m] += ke
        stiff[j:j + m, j:j + m] += ke
        stiff[i:i + m, j:j + m] -= ke
        stiff[j:j + m, i:i + m] -= ke
        mass_c[i:i + m, i:i + m] += h[e] / 3.0 * eye
        mass_c[j:j + m, j:j + m] += h[e] / 3.0 * eye
        mass_c[i:i + m, j:j + m] += h[e] / 6.0 * eye
        mass_c[j:j + m, i:i + m] += h[e] / 6.0 * eye
        mass_l[i:i + m] += h[e] / 2.0
        mass_l[j:j + m] += h[e] / 2.0
        if c_elem is not None:
            ce = c_elem[e]
            pot[i:i + m, i:i + m] += h[e] / 3.0 * ce
            pot[j:j + m, j:j + m] += h[e] / 3.0 * ce
            pot[i:i + m, j:j + m] += h[e] / 6.0 * ce
            pot[j:j + m, i:i + m] += h[e] / 6.0 * ce

    bnd = sp.lil_matrix((big_n, big_n))
    bnd[0:m, 0:m] = scenario.s_left
    bnd[big_n - m:big_n, big_n - m:big_n] = scenario.s_right

    k_l, k_r = scenario.y_left.dim, scenario.y_right.dim
    n_c = (n - 1) * m + k_l + k_r
    cons = sp.lil_matrix((big_n, n_c))
    col = 0
    cons[0:m, 0:k_l] = scenario.y_left.basis
    col += k_l
    for node in range(1, n):
        for comp in range(m):
            cons[node * m + comp, col] = 1.0
            col += 1
    cons[big_n - m:big_n, col:col + k_r] = scenario.y_right.basis

    sym_eigs = np.linalg.eigvalsh(0.5 * (d_elem + d_elem.transpose(0, 2, 1)))
    min_eig = float(sym_eigs.min())
    return DiscreteForm(
        mesh=mesh,
        scenario=scenario,
        stiffness=stiff.tocsr(),
        boundary=bnd.tocsr(),
        potential=pot.tocsr(),
        mass_lumped=mass_l,
        mass_consistent=mass_c.tocsr(),
        constraint=cons.tocsr(),
        coefficient_min_eig=min_eig,
        coefficient_elliptic=bool(min_eig >= scenario.gamma - 1e-10),
    )


def _endpoint_matrices(scenario: Scenario):
    return (
        (scenario.y_left, scenario.s_left),
        (scenario.y_right, scenario.s_right),
    )


def form_diagnostics(form: DiscreteForm) -> FormDiagnostics:
    """Discrete counterparts of the form-level characterizations.

    * elliptic: symmetric part of the constrained stiffness-only matrix is
      positive semidefinite (relative tolerance);
    * accretive: P_Y sym(S) P_Y positive semidefinite at each endpoint;
    * symmetric: every element coefficient is symmetric and
      P_Y (S - S^T) P_Y vanishes at each endpoint (likewise for a
      potential when present);
    * kernel_dim: multiplicity of the eigenvalue 0 of the constrained
      operator; exponential stability corresponds to kernel_dim = 0.
    """
    scenario = form.scenario
    k_c = form.constrained_stiffness().toarray()
    scale = max(float(np.abs(k_c).max()), 1.0)
    sym_part = 0.5 * (k_c + k_c.T)
    elliptic = bool(np.linalg.eigvalsh(sym_part).min() >= -DIAG_TOL * scale)

    accretive = True
    symmetric = True
    for y, s in _endpoint_matrices(scenario):
        p = y.projection
        sym_s = p @ (0.5 * (s + s.T)) @ p
        if np.linalg.eigvalsh(0.5 * (sym_s + sym_s.T)).min() < -DIAG_TOL * (
                1.0 + float(np.abs(s).max())):
            accretive = False
        skew = p @ (s - s.T) @ p
        if np.abs(skew).max() > DIAG_TOL * (1.0 + float(np.abs(s).max())):
            symmetric = False
    d_elem = scenario.resolve_diffusion(form.mesh)
    if np.abs(d_elem - d_elem.transpose(0, 2, 1)).max() > DIAG_TOL * (
            1.0 + float(np.abs(d_elem).max())):
        symmetric = False
    c_elem = scenario.resolve_potential(form.mesh)
    if c_elem is not None and np.abs(
            c_elem - c_elem.transpose(0, 2, 1)).max() > DIAG_TOL * (
            1.0 + float(np.abs(c_elem).max())):
        symmetric = False

    a_c = form.operator().toarray()
    a_scale = max(float(np.abs(a_c).max()), 1.0)
    svals = np.linalg.svd(a_c, compute_uv=False)
    kernel_dim = int(np.sum(svals <= DIAG_TOL * a_scale * a_c.shape[0]))
    return FormDiagnostics(elliptic=elliptic, accretive=accretive,
                           symmetric=symmetric, kernel_dim=kernel_dim)


def generalized_eigenpairs(form: DiscreteForm, k: int, mass: str = "lumped"):
    """k smallest eigenpairs of A_c v = lambda M_c v (dense symmetric
    solve; vectors are M-orthonormal, in constrained coordinates)."""
    if k < 1 or k > form.n_constrained:
        raise ValueError(f"k must be within 1..{form.n_constrained}")
    a_c = form.operator().toarray()
    a_c = 0.5 * (a_c + a_c.T)
    m_c = form.mass(mass)
    if mass == "lumped":
        m_dense = np.diag(m_c)
    else:
        m_dense = m_c.toarray()
    lam, vec = sla.eigh(a_c, m_dense, subset_by_index=[0, k - 1])
    return lam, vec


def _eigen_cluster(form: DiscreteForm, eigenindex: int, mass: str):
    """Orthonormal basis of the eigenspace containing ``eigenindex``
    (eigenvalues grouped at relative tolerance 1e-8)."""
    k = min(form.n_constrained, eigenindex + 4)
    lam, vec = generalized_eigenpairs(form, k, mass)
    if eigenindex >= lam.size:
        raise IndexError("eigenindex out of computed range")
    target = lam[eigenindex]
    tol = 1e-8 * (1.0 + abs(target))
    members = np.nonzero(np.abs(lam - target) <= tol)[0]
    return lam[eigenindex], vec[:, members]


def verify_natural_bc(form: DiscreteForm, eigenindex: int,
                      mass: str = "lumped") -> float:
    """Endpoint residual of the natural boundary condition for one
    eigenfunction: || P_Y (D df/dnu + S f) || reconstructed from one-sided
    differences.  Decays at first order in the mesh size for smooth
    eigenfunctions.

    Degenerate eigenvalues are handled by taking the largest singular value
    of the residual map over the whole eigenspace, which makes the result
    independent of the arbitrary basis returned by the solver.
    """
    scenario = form.scenario
    _, cluster = _eigen_cluster(form, eigenindex, mass)
    d_elem = scenario.resolve_diffusion(form.mesh)
    h = form.mesh.element_sizes
    rows = []
    for j in range(cluster.shape[1]):
        u = form.nodal(cluster[:, j])
        left = d_elem[0] @ (u[0] - u[1]) / h[0] + scenario.s_left @ u[0]
        right = d_elem[-1] @ (u[-1] - u[-2]) / h[-1] + scenario.s_right @ u[-1]
        rows.append(np.concatenate([
            scenario.y_left.projection @ left,
            scenario.y_right.projection @ right,
        ]))
    resid = np.array(rows).T  # (2m, cluster size)
    if resid.size == 0:
        return 0.0
    return float(np.linalg.norm(resid, 2))
