"""Energy-dephasing simulator and experiment design toolkit.

Evolves density matrices under a double-commutator dephasing model with
configurable global/local partitions, simulates the interference
experiments that probe it (Ramsey, Michelson, GHZ), and computes the
sensitivity figures for experiment design.
"""

from .constants import (
    C_LIGHT,
    EV,
    HBAR,
    OMEGA_PER_EV,
    PLANCK_TIME,
    YEAR_SECONDS,
)
from .core import (
    DensityMatrix,
    HilbertSpace,
    InvariantError,
    Operator,
    PureState,
    beamsplitter_5050,
    coherence_weight,
    coherent_state,
    eig_h,
    embed,
    expectation,
    fock_cutoff,
    fock_state,
    hspace,
    identity,
    mode_ops,
    partial_trace,
    tensor,
    validate_density,
    validate_state,
)
from .engine import (
    DecoherenceSpec,
    EvolutionSpec,
    LossChannel,
    decoherence_rate,
    evolve,
    evolve_analytic,
    evolve_stepped,
    generator,
    validate_decoherence_spec,
)
from .interferometry import (
    CoherentField,
    DecoherencePartition,
    FockField,
    FringeResult,
    GhzConfig,
    GhzResult,
    MichelsonConfig,
    MichelsonResult,
    RamseyConfig,
    default_phases,
    phase_average_check,
    run_ghz,
    run_michelson,
    run_ramsey_quantized,
    run_ramsey_semiclassical,
    split_pulse_ramsey_state,
    visibility,
)
from .sensitivity import (
    DesignResult,
    DistanceReach,
    MatterWaveBound,
    SpeciesParams,
    cosmic_bound,
    distance_reach,
    ghz_design,
    ghz_design_grid,
    kappa_from_scattering,
    matterwave_bound,
    single_atom_reach,
)

__version__ = "0.1.0"
