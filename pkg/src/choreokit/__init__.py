"""choreokit: skeletal dance-sequence ideation engine.

Text-conditioned diffusion generation of short dance clips, masked-diffusion
editing (extension, style transfer, partial-body edits, blending), provenance
gallery, glTF/PNG export, and a newline-JSON TCP protocol for interactive use.
"""

from .diffusion import NoiseSchedule, ObservationMask, SamplerConfig, cosine_schedule, p_sample_loop, q_sample
from .editing import (
    BlendCommand,
    ExtendCommand,
    PartialBodyCommand,
    StyleCommand,
    StyleLibrary,
    blend,
    extend,
    generate_variants,
    partial_body_edit,
    style_transfer,
)
from .engine import Engine
from .gallery import ProvenanceEntry, SequenceRecord, SequenceStore
from .model import ModelBundle, load_checkpoint, save_checkpoint
from .motion import (
    BodyPartMask,
    MotionSequence,
    Skeleton,
    build_default_skeleton,
    concat,
    forward_kinematics,
    low_pass,
    slice_sequence,
)
from .network import NetConfig
from .training import TrainConfig, train, train_two_stage

__version__ = "0.1.0"
