"""Visual-prompt engine and evaluation harness for object-centric video
understanding: prompt synthesis from masks, bi-directional propagation of a
single authored prompt across a clip, alpha-composited overlays,
segmentation/text metrics, and instruction-dataset tooling.
"""

__version__ = "0.1.0"

from .errors import (
    ContractViolation,
    DegenerateMaskError,
    EmptyClipError,
    EmptyCorpusError,
    EmptyDatasetError,
    EmptyMarkError,
    EmptyMaskError,
    EmptyObjectError,
    NoNegativesError,
    NoTargetsError,
    VidPromptError,
)
from .raster import (
    BBox,
    BinaryMask,
    Frame,
    PointF,
    PromptLayer,
    alpha_blend,
    mask_bbox,
    mask_boundary,
    mask_centroid,
    nearest_interior_point,
)
from .synth import (
    ALL_KINDS,
    PromptKind,
    PromptStyle,
    ValidityReport,
    default_style,
    random_prompt_kind,
    synthesize_prompt,
    validate_prompt,
)
from .track import (
    LucasKanadeTracker,
    OracleTracker,
    PointTracker,
    TrackedPointSet,
    TrackerConfig,
    lk_track_step,
    seed_points,
    to_gray,
    track_bidirectional,
)
from .propagate import (
    PropagatedPrompt,
    PropagationConfig,
    PropagationMode,
    RedrawMode,
    oracle_propagate,
    overlay_video,
    propagate_prompt,
    redraw_layer,
)
from .segmetrics import (
    SegEvalResult,
    contour_accuracy_f,
    evaluate_dataset,
    evaluate_sequence,
    region_similarity_j,
    robustness_r,
)
from .textmetrics import bleu4, cider, rouge_l, tokenize
from .losses import (
    LossWeights,
    MaskLogits,
    bce_mask,
    bce_mask_grad,
    cross_entropy_tokens,
    dice_loss,
    dice_loss_grad,
    total_loss,
)
from .dataset import (
    AnnotationGroup,
    DatasetReport,
    InstructRecord,
    build_instruct_record,
    ingest_annotations,
    sample_frames,
    summarize_stats,
    validate_dataset,
)

__all__ = [name for name in dir() if not name.startswith("_")]
