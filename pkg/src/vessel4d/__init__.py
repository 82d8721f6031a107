"""vessel4d: edge-graph displacement and stress-proxy analysis for deforming
vessel-surface point-cloud sequences, with synthetic ground-truth validation."""

from .clustering import ClusterAssignment, cluster_frame0, dbscan_within_group, kmeans_rgb
from .coherence import (
    CoherenceFilter,
    CoherenceParams,
    DisplacementField,
    mad_scale,
    robust_weight,
    smooth_displacement,
    smooth_frame,
)
from .config import PipelineConfig
from .evaluation import (
    agreement,
    bland_altman,
    cd_normalized,
    chamfer,
    ols_regression,
    precision_recall_f,
    roi_error,
    temporal_delta_cd,
)
from .graph import (
    CurationEdit,
    EdgeGraph,
    EdgeGraphBuilder,
    apply_curation,
    build_edges,
    track_centroids,
)
from .metrics import (
    MaterialParams,
    RoiSpec,
    StressField,
    edge_stress,
    neo_hookean_stress,
    roi_displacement_max,
    roi_displacement_series,
    roi_stress_max,
    roi_stress_series,
)
from .pipeline import PipelineResult, evaluate_bundle, run_pipeline, scf_ablation
from .sequence import PrimitiveSequence, filter_primitives, load_sequence, write_sequence
from .synth import GroundTruth, SynthConfig, degrade, generate

__version__ = "0.1.0"

__all__ = [
    "ClusterAssignment",
    "CoherenceFilter",
    "CoherenceParams",
    "CurationEdit",
    "DisplacementField",
    "EdgeGraph",
    "EdgeGraphBuilder",
    "GroundTruth",
    "MaterialParams",
    "PipelineConfig",
    "PipelineResult",
    "PrimitiveSequence",
    "RoiSpec",
    "StressField",
    "SynthConfig",
    "agreement",
    "apply_curation",
    "bland_altman",
    "build_edges",
    "cd_normalized",
    "chamfer",
    "cluster_frame0",
    "dbscan_within_group",
    "degrade",
    "edge_stress",
    "evaluate_bundle",
    "filter_primitives",
    "generate",
    "kmeans_rgb",
    "load_sequence",
    "mad_scale",
    "neo_hookean_stress",
    "ols_regression",
    "precision_recall_f",
    "robust_weight",
    "roi_displacement_max",
    "roi_displacement_series",
    "roi_error",
    "roi_stress_max",
    "roi_stress_series",
    "run_pipeline",
    "scf_ablation",
    "smooth_displacement",
    "smooth_frame",
    "temporal_delta_cd",
    "track_centroids",
    "write_sequence",
]
