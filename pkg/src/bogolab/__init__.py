"""Exact-diagonalization laboratory for the Bogoliubov c-number substitution.

The package builds truncated bosonic lattice gases in a symmetry-breaking
field, computes grand-canonical pressures and mode-0 observables, applies the
c-number substitution along both routes (displaced Gibbs trace and
substituted Hamiltonian), and audits the inequalities, derivative identities
and finite-size trends that connect condensate density to the broken-symmetry
order parameter.
"""

from .errors import (
    BogolabError,
    ConfigError,
    ConstructionError,
    DimensionGuardError,
    MaximizationError,
    TruncationError,
)
from .model import LatticeModelSpec, SuperstabilityBound, superstability_check
from .fock import (
    FockBasis,
    OperatorKind,
    SparseOperator,
    Subspace,
    build_basis,
    mode_operator,
    number_operator,
)
from .hamiltonian import Variant, assemble_hamiltonian
from .thermal import (
    DerivativeIdentityReport,
    Spectrum,
    ThermalObservables,
    derivative_identity_check,
    diagonalize,
    observables_bundle,
    pressure,
    thermal_expectation,
    thermal_state,
)
from .bogoliubov import (
    BogoliubovMaximum,
    CoherentVector,
    SubstitutedFamily,
    SubstitutedHamiltonian,
    coherent_vector,
    displaced_trace_pressure,
    embed_product,
    maximize_over_C,
    pressure0,
    substitute_hamiltonian,
)
from .convex import (
    ConvexityReport,
    DerivativeEstimate,
    GriffithsReport,
    PdeResidualReport,
    SampledFunction,
    SampledSurface,
    convexity_and_parity_audit,
    griffiths_check,
    one_sided_derivative,
    pde_residual,
)

__version__ = "0.1.0"

from .harness import (     # noqa: E402  (needs __version__ for provenance)
    CSV_COLUMNS,
    SweepConfig,
    SweepRecord,
    build_report,
    config_from_dict,
    equivalence_gap_trend,
    export_report,
    inequality_audit,
    interchange_limits_probe,
    load_config,
    run_sweep,
)
