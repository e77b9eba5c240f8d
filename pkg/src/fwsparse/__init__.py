"""Sparse exact-recovery toolkit: conditional-gradient and greedy solvers,
dictionary incoherence analysis, instance generators, and a certification
harness with traced experiments."""

from .analysis import (
    AnalysisReport,
    analyze_dictionary,
    analyze_instance,
    babel,
    babel_profile,
    beta_for_immediate_contraction,
    coherence,
    contraction_ratio,
    max_recoverable_m,
    recovery_condition,
    support_spectrum_bound_holds,
)
from .harness import (
    BetaPolicy,
    ExperimentConfig,
    TrialReport,
    compare_solvers,
    detect_ball_entry,
    detect_contraction_start,
    run_experiment,
    run_trial,
    verify_solver_invariants,
    write_trace_csv,
)
from .instances import (
    GeneratorSpec,
    SparseInstance,
    build_identity_hadamard,
    build_random_unit,
    hadamard_matrix,
    load_dictionary,
    load_instance,
    sample_instance,
    save_dictionary,
    save_instance,
)
from .linalg import (
    Dictionary,
    DimensionMismatchError,
    SupportSet,
    as_vector,
    correlations,
    extremal_singular_values,
    mat_vec,
    submatrix,
)
from .solvers import (
    IterationRecord,
    SolveResult,
    SolverConfig,
    fw_line_search,
    fw_select,
    fw_solve,
    mp_solve,
    omp_solve,
    solve,
)

__version__ = "0.1.0"
