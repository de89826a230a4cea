"""Certified bounds on the critical steering radius of two-qubit states.

The critical radius measures how much a state can be shrunk toward the
maximally mixed direction before it stops being steerable; a state is
steerable exactly when the radius is below one. This package computes
certified lower and upper bounds on it with linear programs over covering
polytopes of the Bloch sphere, cross-checks them against analytic formulas,
traces steerability boundaries, and probes generalized measurements by
simulated annealing.
"""

from .boundary import (
    RayCrossing,
    SectionResult,
    SectionSpec,
    SymmetricSection,
    ThetaWindow,
    bisect_ray,
    cross_section,
    symmetric_section,
    theta_scan,
)
from .canonical import (
    AbnormalStateError,
    CanonicalState,
    abnormal_radius,
    canonicalize,
    classify,
    swap_parties,
)
from .lp_engine import (
    DegenerateStateError,
    LpSolution,
    RadiusLP,
    WeightResidualError,
    build_lp,
    export_lp_text,
    principal_radius,
    solve,
    solve_axial,
    solve_symmetric,
)
from .polytope import (
    COVERING_NAMES,
    FacetNormalSet,
    PolytopeError,
    SpherePolytope,
    axial_polytope,
    enumerate_facet_normals,
    load_covering,
    outer_companion,
)
from .povm_lab import (
    AnnealSchedule,
    PovmCandidate,
    anneal_r4,
    exact_r2_inverse,
    inverse_fraction,
    random_ensemble,
    seeded_candidate,
)
from .qstate import (
    BlochTensor,
    DensityMatrix,
    StateFamily,
    StateValidationError,
    bloch_tensor,
    density_from_bloch,
    make_family,
    noise_mix,
    ppt_min_eigenvalue,
    random_state,
    singlet,
    theta_state,
    werner,
)
from .radius import (
    RadiusBounds,
    analytic_bounds,
    axial_closed_form,
    critical_radius_bounds,
    tstate_analytic,
    tstate_gradient,
    tstate_quadrature,
    uniform_bound,
)

__all__ = [name for name in dir() if not name.startswith("_")]
