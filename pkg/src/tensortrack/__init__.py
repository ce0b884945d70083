"""Streaming low-rank tensor subspace tracking for dynamic and parallel MRI."""

from .core import (
    TensorSubspace,
    outer_rank_one,
    rank_surrogate,
    rebalance,
    refold,
    singular_values,
    synthesize_slice,
    unfold,
)
from .observation import (
    CoilFourierMask,
    EntryMask,
    FourierMask,
    GenericDense,
    MeasurementBatch,
    build_phi,
    measure,
    project,
    unitary_dft2,
    variable_density_rows,
)
from .tracker import (
    Fixed,
    HessianBound,
    StepConfig,
    StepReport,
    TrackerState,
    empirical_cost,
    factor_gradient,
    hessian_bound,
    init_state,
    run,
    solve_gamma,
    track_step,
)
from .mri import (
    CoilSet,
    FrameEstimate,
    PatchGrid,
    coil_residual_image,
    interp_track_step,
    parallel_track_step,
    patch_assemble,
    patch_partition,
    reconstruct_frame,
    synth_sensitivities,
)
from .sampler import (
    SamplePlan,
    SamplingDistribution,
    adaptive_step,
    draw_samples,
    entry_scores,
    expected_sample_count,
    row_scores,
)
from .metrics import LassoConfig, MetricRow, differential_cs_step, nmse, ssim
from .synth import PhantomSpec, gen_lowrank_stream, gen_phantom
from .cten import CtenFormatError, read_cten, write_cten
from .config import ConfigError, ExperimentConfig, load_config

__version__ = "0.1.0"
