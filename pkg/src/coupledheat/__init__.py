"""Vector-valued diffusion on (0, 1) with subspace-coupled boundary
conditions, plus the algebraic machinery that predicts its qualitative
behavior (positivity, sup-norm contraction, invariant subspaces,
irreducibility, domination, exponential decay) and the simulators that
cross-check those predictions."""

from .analyzer import (
    DominationTarget,
    IntervalTarget,
    IrreducibilityTarget,
    Prediction,
    Report,
    ScalarDominationTarget,
    SimConfig,
    StabilityTarget,
    SubspaceTarget,
    default_targets,
    linf_target,
    positivity_target,
    predict,
    preset,
    verify,
)
from .forms import (
    DiscreteForm,
    Mesh,
    Scenario,
    assemble,
    build_mesh,
    form_diagnostics,
    verify_natural_bc,
)
from .lattice import (
    OrderInterval,
    Subspace,
    commuting_projection_equivalence,
    interval_invariant,
    is_ideal,
    is_irreducible,
    is_positive_operator,
    lattice_decompose,
    leaves_box_invariant,
    lift_norm_check,
    make_subspace,
    project_domination_cone,
    project_interval,
)
from .semigroup import (
    PropertyObservation,
    SingularOperatorError,
    Trajectory,
    check_domination,
    check_scalar_domination,
    decay_rate,
    eigenpairs,
    evolve,
    observe,
)

__version__ = "0.1.0"
