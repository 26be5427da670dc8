"""Sparsity-aware modified filtered-x affine projection algorithms for ANC."""

from .algorithms import (
    AlgorithmConfig,
    Variant,
    fxap_update,
    mfxap_update,
    psi,
    rza_mfxap_update,
    update,
    za_mfxap_update,
)
from .dsp import (
    AR1,
    DelayLine,
    FilteredRegressor,
    WhiteGaussian,
    fir_filter_step,
    generate_noise,
    gram_solve,
    pseudo_apply,
    push_filtered_sample,
    sgn_vec,
)
from .errors import ConfigurationError, DivergenceError, NumericalError
from .metrics import MsdCurve, RunSummary, iterations_to_threshold, msd_db, summarize
from .paths import (
    ImpulseResponse,
    SparsityClass,
    convolve,
    density,
    make_nonsparse,
    make_partially_sparse,
    make_path,
    make_sparse,
    unit_impulse,
)
from .sim import (
    ExperimentResult,
    ExperimentSpec,
    Segment,
    SegmentSchedule,
    SimState,
    VariantSpec,
    run_experiment,
    run_trial,
    step,
)

__version__ = "0.1.0"
