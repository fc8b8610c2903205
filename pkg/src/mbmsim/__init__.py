"""Uplink symbol detection simulator for media-based-modulation massive MIMO.

The package pairs a detector library (exhaustive, linear, and iterative
interference-cancelling detectors over mirror-selected Rayleigh channels)
with a Monte Carlo harness and a CLI that sweeps SNR, writes CSV records,
and renders BER and FLOP comparison figures.
"""

from .channel import (
    ChannelSet,
    DegenerateChannelError,
    NoiseModel,
    derived_rng,
    dump_channel_set,
    generate_channel,
    gram_diag_inverse,
    hardening_metric,
    load_channel_set,
    transmit,
)
from .complexity import (
    FlopCounter,
    FlopModelInput,
    InstrumentationDisabled,
    flops_iic_iter,
    flops_kmap_iic,
    flops_map_isd,
    measured_flops,
)
from .detectors import (
    DetectionOutcome,
    ReducedSet,
    SearchSpaceError,
    SingularEqualizerError,
    iic_detect,
    isd_detect,
    kmap_iic_detect,
    map_isd_detect,
    ml_cost,
    ml_detect,
    mmse_detect,
    nearest_point_quantize,
    qam_fast_quantize,
    select_maps,
)
from .model import (
    ZERO,
    Constellation,
    MbmConfig,
    MbmSymbol,
    bpsk,
    constellation_by_name,
    decode,
    encode,
    signal_set,
    signal_set_size,
    spectral_efficiency,
    square_qam,
    to_dense,
)
from .simulate import (
    BerRecord,
    DetectorSpec,
    GapError,
    SweepConfig,
    run_sweep,
    run_trial,
    snr_gap_at_ber,
    snr_to_sigma2,
)

__version__ = "0.1.0"
