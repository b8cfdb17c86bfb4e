"""Exact and numerical scattering matrices for multistate linear-sweep models."""

from .models import (
    FAMILIES,
    AffineModel,
    MissingPartnerError,
    SingularPartnerError,
    SpinRep,
    UnknownFamilyError,
    build_model,
    build_spin_rep,
    hamiltonian_at,
    model_from_descriptor,
    partner_at,
)
from .numerics import (
    IntegrationDivergedError,
    NonHermitianError,
    OdeSettings,
    commutator,
    hermitian_eigs,
    integrate,
    propagate_unitary,
    unitarity_defect,
)
from .laxflow import (
    BlochVector,
    asymptotic_v3,
    evolve_lax,
    first_row_element,
    lagrange_projector,
    lz_closed_form,
    smatrix_from_bloch,
    smatrix_spin,
    stochastic_defect,
)
from .crossings import (
    CrossingEvent,
    PathSpec,
    UnsupportedCrossingError,
    compose,
    derive_schedule_generic,
    local_smatrix,
    schedule_bowtie3,
    schedule_bowtieN,
    schedule_json,
    schedule_su3six,
)
from .zerocurv import CurvatureReport, curvature_residual, verify_pair
from .oracle import (
    OracleResult,
    adiabatic_spectrum,
    extrapolate,
    numeric_smatrix,
    propagate,
)

__version__ = "0.1.0"
