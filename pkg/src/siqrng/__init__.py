"""Source-independent quantum random number generation toolkit.

Simulates an untrusted photonic source read by trusted threshold
detectors, performs finite-size parameter estimation, extracts certified
random bits by Toeplitz hashing, and validates the output statistically.
"""

from .bits import BitBlock
from .config import RunConfig, SweepSpec, config_from_dict, load_config
from .entropy_math import (
    ProtocolAbortError,
    ProtocolParams,
    SecurityReport,
    binary_entropy,
    binary_entropy_derivative,
    composed_security,
    deviation_exponent,
    deviation_failure_bound,
    final_length,
    log2_deviation_failure_bound,
    mismatch_adjusted_length,
    trace_distance_from_fidelity,
)
from .estimation import (
    EstimationResult,
    estimate_session,
    observed_x_error,
    plan_x_count,
    solve_deviation,
)
from .extractor import (
    ExtractionError,
    ExtractionPlan,
    extract_session,
    make_plan,
    toeplitz_extract,
)
from .photonic_sim import (
    Basis,
    ChannelConfig,
    ClickEvent,
    ClickStream,
    DetectorConfig,
    Pattern,
    SourceConfig,
    SourceMode,
    detect_pulse,
    run_session,
    sample_photon_number,
)
from .pipeline import (
    CurvePoint,
    SessionResult,
    run_protocol_session,
    run_sweep,
)
from .randtest import (
    TestReport,
    autocorrelation,
    block_frequency_test,
    compare_raw_vs_final,
    cusum_test,
    longest_run_test,
    monobit_test,
    run_battery,
    runs_test,
)
from .seeds import SeedExhaustedError, SeedSource
from .squash_sample import (
    OutcomeKind,
    SessionTally,
    SquashedOutcome,
    plan_basis_positions,
    seed_length_required,
    squash,
    squash_and_tally,
    tally_session,
    unrank_combination,
)

__version__ = "0.1.0"
