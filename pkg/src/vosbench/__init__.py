"""Multi-object video segmentation benchmark toolkit.

Scoring (region J, boundary F, and their mean J&F), bipartite matching of
unordered object proposals, submission validation, report generation, an
interactive scribble-robot service, and deterministic synthetic fixtures.
"""

from .errors import VosbenchError
from .evaluate import (
    DatasetReport,
    ObjectRow,
    aggregate,
    evaluate_semisupervised,
    evaluate_split,
    evaluate_unsupervised,
    evaluated_frames,
    validate_submission,
)
from .masks import (
    MaskSequence,
    MultiObjectMask,
    color_palette,
    decode_mask,
    encode_mask,
    index_dataset,
    load_sequence,
)
from .matching import (
    AccuracyMatrix,
    Assignment,
    brute_force_assignment,
    build_accuracy_matrix,
    solve_assignment,
)
from .metrics import MetricTriple, boundary_f, jaccard, summarize
from .robot import InteractiveService, Scribble, robot_scribble
from .synth import (
    ObjectSpec,
    SceneSpec,
    load_scene_file,
    make_mini_split,
    perturb,
    render_dataset,
)
from .wire import rle_decode, rle_encode

__version__ = "0.1.0"

__all__ = [
    "AccuracyMatrix",
    "Assignment",
    "DatasetReport",
    "InteractiveService",
    "MaskSequence",
    "MetricTriple",
    "MultiObjectMask",
    "ObjectRow",
    "ObjectSpec",
    "SceneSpec",
    "Scribble",
    "VosbenchError",
    "aggregate",
    "boundary_f",
    "brute_force_assignment",
    "build_accuracy_matrix",
    "color_palette",
    "decode_mask",
    "encode_mask",
    "evaluate_semisupervised",
    "evaluate_split",
    "evaluate_unsupervised",
    "evaluated_frames",
    "index_dataset",
    "jaccard",
    "load_scene_file",
    "load_sequence",
    "make_mini_split",
    "perturb",
    "render_dataset",
    "rle_decode",
    "rle_encode",
    "robot_scribble",
    "solve_assignment",
    "summarize",
    "validate_submission",
    "__version__",
]
