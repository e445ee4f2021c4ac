"""Budget-aware out-of-distribution detection on text-attributed graphs.

The library combines a cheap zero-shot annotator, a K+1-class graph
convolutional filter trained on its noisy labels, budget-constrained node
selection, and post-hoc OOD scoring of a K-class target classifier.
"""

from .annotate import (
    AnnotationCache,
    AnnotationSet,
    LabelOutcome,
    MockConfusion,
    OracleGroundTruth,
    PromptTemplate,
    RemoteChat,
    annotate,
    cost_report,
    load_price_table,
    parse_response,
    pick_annotation_nodes,
    predicted_ood_proportion,
    render_prompt,
    uniform_confusion_matrix,
)
from .bundle import load_bundle, load_splits, save_bundle, save_splits
from .config import ExperimentConfig, emit_config, parse_config, validate_config
from .gcn import (
    GcnActivations,
    GcnModel,
    LabeledTrainingSet,
    TrainConfig,
    adam_step,
    backward,
    ce_loss_and_grad,
    forward,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .graph import (
    ClassSpace,
    NormAdj,
    SplitAssignment,
    TagGraph,
    build_normalized_adjacency,
    class_split_for,
    make_splits,
)
from .metrics import (
    AggregateReport,
    EvalReport,
    aggregate,
    auroc,
    aupr,
    format_percent,
    fpr_at_95_tpr,
    id_accuracy,
)
from .pipeline import (
    BudgetLedger,
    PipelineResult,
    emit_report,
    emit_study,
    run_pipeline,
    run_single,
    run_upper_bound_study,
)
from .scores import (
    OodScores,
    compute_detector,
    energy_score,
    entropy_score,
    msp_score,
    propagate_scores,
    softmax,
)
from .selection import (
    CandidateIdSet,
    SelectionResult,
    filter_candidates,
    merge_labels,
    oracle_label,
    propagated_features,
    select_kmedoids,
    select_random,
    select_uncertainty,
    train_filter,
)
from .synthetic import make_sbm_graph

__version__ = "0.1.0"
