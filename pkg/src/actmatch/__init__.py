"""actmatch: unsupervised detection of matching action segments across videos.

The pipeline encodes sliding-window video segments with rank pooling, builds
a cross-video similarity (gram) matrix, keeps temporally consistent diagonal
runs of confident similarities, and reports non-redundant candidate pairs of
matching action units.  No labels are used at any stage; annotations appear
only in evaluation.
"""

from .baselines import ClusterConfig, cluster_match, cluster_segments, plain_match
from .errors import ActmatchError, ConfigError, ConvergenceError, DataFormatError
from .evaluation import (
    EvalReport,
    GtPair,
    aggregate,
    evaluate,
    gt_pairs,
    recall_by_label,
)
from .matcher import (
    ActionUnit,
    CandidatePair,
    GramMatrix,
    MatchConfig,
    adaptive_threshold,
    consistency_scan,
    extract_runs,
    fuse_grams,
    gram_matrix,
    interval_iou,
    match_from_gram,
    match_pair,
    nms,
    score_candidate,
)
from .preprocess import (
    SmoothingConfig,
    arma_smooth,
    smooth_sequence,
    time_varying_mean,
    unit_normalize,
)
from .rankpool import (
    RankPoolConfig,
    SegmentEncoding,
    SegmentationConfig,
    encode_segments,
    pooling_gradient,
    pooling_objective,
    rank_pool_approx,
    rank_pool_exact,
    read_encodings,
    segment_starts,
    write_encodings,
)
from .seqio import (
    Annotation,
    FeatureSequence,
    OverlapWarning,
    SynthConfig,
    annotations_by_video,
    read_annotations,
    read_features,
    synth_generate,
    write_annotations,
    write_features,
)

__version__ = "0.1.0"
