"""Pool-based active learning with class/group questions.

The package trains softmax score models on a mix of full answers ("x is
class c") and partial answers ("not all of x1, x2 are class c"), selects
each next question by cost-normalized answer entropy, and screens
candidates through a shrinking model-guided distance filter.
"""

from .acquisition import (
    AcquisitionConfig,
    AcquisitionResult,
    cost_scale,
    optimize_question_point,
    select_question,
)
from .data import Dataset, load_csv, make_blobs, save_csv, train_holdout_split
from .engine import (
    EngineConfig,
    LearningSession,
    RunMetrics,
    SimulatedOracle,
    evaluate,
    run_active_learning,
    run_ideal_baseline,
)
from .exploration import ThresholdSchedule, build_schedule, candidate_set, model_distance
from .models import (
    LinearSoftmaxModel,
    MLPSoftmaxModel,
    TrainingConfig,
    TrainingDivergedError,
    loss_gradient,
    make_model,
    softmax,
    train_model,
)
from .questions import (
    AnswerRecord,
    KnowledgeBase,
    QuestionKind,
    QuestionPoint,
    aggregate_loss,
    answer_cross_entropy,
    answer_distribution,
    answer_entropy,
    question_loss,
)
from .theory import (
    RegionPartition,
    SafeSamplerConfig,
    binary_entropy,
    binary_entropy_inverse,
    entropy_bounds_at_true_prob,
    entropy_lower_for_gap,
    entropy_upper_for_gap,
    partition_confidence_regions,
    sample_safe_question,
)

__version__ = "0.1.0"

__all__ = [
    "AcquisitionConfig",
    "AcquisitionResult",
    "AnswerRecord",
    "Dataset",
    "EngineConfig",
    "KnowledgeBase",
    "LearningSession",
    "LinearSoftmaxModel",
    "MLPSoftmaxModel",
    "QuestionKind",
    "QuestionPoint",
    "RegionPartition",
    "RunMetrics",
    "SafeSamplerConfig",
    "SimulatedOracle",
    "ThresholdSchedule",
    "TrainingConfig",
    "TrainingDivergedError",
    "aggregate_loss",
    "answer_cross_entropy",
    "answer_distribution",
    "answer_entropy",
    "binary_entropy",
    "binary_entropy_inverse",
    "build_schedule",
    "candidate_set",
    "cost_scale",
    "entropy_bounds_at_true_prob",
    "entropy_lower_for_gap",
    "entropy_upper_for_gap",
    "evaluate",
    "load_csv",
    "loss_gradient",
    "make_blobs",
    "make_model",
    "model_distance",
    "optimize_question_point",
    "partition_confidence_regions",
    "question_loss",
    "run_active_learning",
    "run_ideal_baseline",
    "sample_safe_question",
    "save_csv",
    "select_question",
    "softmax",
    "train_holdout_split",
    "train_model",
]
