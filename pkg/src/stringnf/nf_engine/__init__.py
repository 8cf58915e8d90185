"""Normal form engine: exact polynomial fields, rational fields, and solvers."""

from .poly import (
    ANTI,
    DIAG,
    NFResult,
    ParityError,
    PolyVF,
    QC,
    QC_I,
    QC_ONE,
    QC_ZERO,
    canonical_from_exponents,
    commutator,
    is_action_key,
    key_exponents,
    multiplicity,
    resonant_normal_form,
    solve_homological_z1,
    split_integrable,
    stiffness_taylor_coeff,
    taylor_vf,
    z1_field,
)
from .rational import (
    DivisorRefusal,
    RationalVF,
    conj_index_vector,
    di_functional,
    divisor_zero_form,
    evaluate_exact,
    evaluate_vf,
    is_rational_normal_form,
    key_order,
    omega4_hessian,
    rational_commutator,
    validate_class,
)
from .serialize import (
    dump_field,
    field_from_json,
    field_to_json,
    load_field,
)
from .solvers import (
    UnsolvableKeyError,
    chi3_explicit,
    quintic_rational_solve,
    septic_stage_input,
    solve_homological_z3z5,
)

__all__ = [
    "DivisorRefusal",
    "UnsolvableKeyError",
    "chi3_explicit",
    "dump_field",
    "field_from_json",
    "field_to_json",
    "load_field",
    "omega4_hessian",
    "quintic_rational_solve",
    "septic_stage_input",
    "solve_homological_z3z5",
    "RationalVF",
    "conj_index_vector",
    "di_functional",
    "divisor_zero_form",
    "evaluate_exact",
    "evaluate_vf",
    "is_rational_normal_form",
    "key_order",
    "rational_commutator",
    "validate_class",
    "ANTI",
    "DIAG",
    "NFResult",
    "ParityError",
    "PolyVF",
    "QC",
    "QC_I",
    "QC_ONE",
    "QC_ZERO",
    "canonical_from_exponents",
    "commutator",
    "is_action_key",
    "key_exponents",
    "multiplicity",
    "resonant_normal_form",
    "solve_homological_z1",
    "split_integrable",
    "stiffness_taylor_coeff",
    "taylor_vf",
    "z1_field",
]
