"""Activity recognition pipeline with k-fold vs leave-one-subject-out evaluation."""

from .classifiers import ClassifierKind, ClassifierSpec, fit, predict
from .dataset import ChannelSelection, Dataset, SubjectRecording, load_dataset, load_recording
from .evaluation import (
    ConfusionMatrix,
    EvalResult,
    FoldPlan,
    Scheme,
    cross_validate,
    kfold_plan,
    micro_f1,
    subject_plan,
)
from .features import FeatureMatrix, FeatureSet, extract_features, mean_crossing_rate
from .segmentation import Window, WindowSpec, segment, window_label
from .synthgen import SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "ChannelSelection", "ClassifierKind", "ClassifierSpec", "ConfusionMatrix", "Dataset",
    "EvalResult", "FeatureMatrix", "FeatureSet", "FoldPlan", "Scheme", "SubjectRecording",
    "SynthConfig", "Window", "WindowSpec", "cross_validate", "extract_features", "fit",
    "generate", "kfold_plan", "load_dataset", "load_recording", "mean_crossing_rate",
    "micro_f1", "predict", "segment", "subject_plan", "window_label",
]
