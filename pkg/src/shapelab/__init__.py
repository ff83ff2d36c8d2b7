"""Enumerative amplitude shaping, fiber propagation, and temporal metrics."""

__version__ = "0.1.0"

from .shaping import (  # noqa: F401,E402
    AmplitudeAlphabet,
    EmptyTrellisError,
    InadmissibleSequenceError,
    ShapingConstraints,
    ShapingError,
    ShapingTrellis,
    build_trellis,
    calibrate_emax,
    constraints_from_rules,
    count_sequences,
    decode_sequence,
    encode_index,
)
from .mapping import (  # noqa: F401
    ComplexSymbolFrame,
    SignSource,
    generate_uniform_frame,
    map_to_qam,
    normalize_power,
)
from .fiber import (  # noqa: F401
    LinkConfig,
    NumericalBlowupError,
    Waveform,
    estimate_effective_snr,
    matched_filter,
    receiver_chain,
    rrc_shape,
    ssfm_propagate,
)
from .metrics import (  # noqa: F401
    AcfReport,
    EdiReport,
    MomentReport,
    acf,
    edi,
    moments,
    moving_window_angle,
    windowed_energy,
)
from .runner import ExperimentConfig, SchemeSpec, load_config, run  # noqa: F401
from .summarize import summarize  # noqa: F401
