"""Alignment-kernel similarity for interleaved image-text embedding
sequences, with the structure-induced MSE loss, a projector trainer, and
brute-force cosine retrieval."""

from .backend import BACKEND, available_backends
from .core import (
    Form,
    InterleavedSequence,
    KernelConfig,
    KernelMode,
    Modality,
    PoolPolicy,
    PrefixView,
    RepresentationVector,
    SingleSliceMode,
    SliceEmbedding,
    ValidationReport,
    make_prefix_views,
    pool_representation,
    sample_cuts,
    validate_slice,
)
from .gak import (
    AlignmentPath,
    alignment_score,
    best_alignment_path,
    enumerate_alignments,
    gak_bruteforce,
    gak_forward,
    gak_forward_raw,
    mean_pairwise_similarity,
    single_slice_gak,
)
from .kernel import distance_matrix, local_kernel, local_kernel_from_distance, sigma, triple_distance
from .loss import (
    BatchSpec,
    MatrixKind,
    SimilarityMatrix,
    TrainerConfig,
    TrainResult,
    label_matrix,
    loss_gradient,
    mse_loss,
    project_representations,
    representation_matrix,
    train_projector,
)
from .manifest import Manifest, load_manifest, write_manifest
from .retrieval import (
    EvalCase,
    EvalReport,
    IndexEntry,
    RetrievalIndex,
    build_index,
    load_index,
    query_topk,
    rank_all,
    recall_at_k,
    save_index,
    winoground_scores,
)

__version__ = "0.1.0"
