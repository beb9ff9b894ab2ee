"""Channel-coding laboratory for code families that trade off the
weight-based and reliability-based row-selection rules of Kronecker-power
codes, with exact erasure MAP, successive-cancellation (plain and list), and
belief-propagation decoders plus a reproducible Monte Carlo harness."""

from .channels import (
    BAWGN,
    BEC,
    ChannelModel,
    ConvexPerfect,
    ObservationBlock,
    bhattacharyya,
    capacity,
    format_channel,
    parse_channel,
    transmit,
    trial_stream,
)
from .construction import (
    BinaryExpansion,
    CodeSpec,
    FamilyStep,
    LayerPermutation,
    ProfileKind,
    ReliabilityProfile,
    bec_profile,
    bhattacharyya_bec,
    family_walk,
    gaussian_profile,
    interp_code,
    load_spec,
    permuted_code,
    polar_select,
    rm_select,
    save_spec,
    union_bound,
    z_better,
    z_worse,
)
from .decoders import (
    DecodeResult,
    DecodeStatus,
    IntegrityError,
    bp_decode,
    map_decode_bec,
    sc_decode_bec,
    sc_decode_llr,
    scl_decode,
)
from .gf2 import BitBlock, GF2Matrix, SolveStatus, encode, kron_power, rank, row_weight, solve_unique
from .montecarlo import (
    DecoderConfig,
    PermutationReport,
    ResultRow,
    SimEstimate,
    SweepPlan,
    permutation_check,
    random_code_reference,
    run_point,
    run_sweep,
    wilson_interval,
    write_csv,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
