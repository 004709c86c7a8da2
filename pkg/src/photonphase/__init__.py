"""photonphase: simulation and reconstruction for photon-starved coherent
phase imaging.

The pipeline: an 8-bit image displayed on a phase-modulating SLM shapes a
coherent beam, the free-space diffraction pattern is recorded by an EM-CCD
at photon counts down to a fraction of a photon per pixel, and the phase is
recovered classically (Gerchberg-Saxton, or its half-iteration approximant)
or handed to a learned reconstructor through the PRD1 dataset format.
"""

from .beam import (
    BeamModel,
    SlmCalibration,
    capture_fraction,
    ground_truth_phase,
    incident_field,
    object_field,
    slm_transmittance,
    wrap_phase,
)
from .dataset import (
    Dataset,
    DatasetContext,
    build_dataset,
    generate_example,
    load_dataset,
    read_prd,
    resample_for_end_to_end,
    write_prd,
)
from .errors import (
    CalibrationMissing,
    ChecksumMismatch,
    ConfigInvalid,
    DataError,
    DegenerateImage,
    GeometryMismatch,
    InsufficientFrames,
    NegativeIntensity,
    PairingError,
    SamplingViolation,
    SplitMissing,
    ToolkitError,
    UnknownClass,
)
from .field import (
    ComplexField,
    PropagationPlan,
    SINGLE_TRANSFORM,
    TRANSFER_FUNCTION,
    crop_center,
    embed,
    intensity,
    min_padded_size,
    propagate,
    transfer_plan,
)
from .geometry import Geometry, image_plane_pitch
from .metrics import MetricsRecord, npcc, pcc, recover_scale
from .retrieval import Approximant, GsResult, gs_approximant, gs_reconstruct
from .sensor import (
    NOISE_LEVELS,
    PhotonBudget,
    SensorConfig,
    counts_to_photons,
    detect,
    measured_snr,
    photoelectrons_per_pixel,
    spatial_snr,
)

__version__ = "0.1.0"
