"""Model assembly, training loops, and serialization."""

from .common import TrainingError, TrainRun, convergence_epoch, minibatches, spawn_rng
from .container import (
    FORMAT_VERSION,
    KIND_REGISTRY,
    ModelFormatError,
    load_model,
    load_payload,
    model_kind,
    save_model,
    save_payload,
)
from .hcnn import (
    AUX_DISCOUNT,
    ClassifierData,
    Hcnn,
    HcnnConfig,
    hcnn_loss,
    landmark_features,
    ranked_predictions,
    spatial_trace,
    train_hcnn,
)
from .landmark_net import (
    LandmarkNet,
    LandmarkNetConfig,
    build_and_train_landmark_net,
    scale_targets,
    unscale_predictions,
)

__all__ = [
    "AUX_DISCOUNT",
    "ClassifierData",
    "FORMAT_VERSION",
    "Hcnn",
    "HcnnConfig",
    "KIND_REGISTRY",
    "LandmarkNet",
    "LandmarkNetConfig",
    "ModelFormatError",
    "TrainRun",
    "TrainingError",
    "build_and_train_landmark_net",
    "convergence_epoch",
    "hcnn_loss",
    "landmark_features",
    "load_model",
    "load_payload",
    "minibatches",
    "model_kind",
    "ranked_predictions",
    "save_model",
    "save_payload",
    "scale_targets",
    "spatial_trace",
    "spawn_rng",
    "train_hcnn",
    "unscale_predictions",
]
