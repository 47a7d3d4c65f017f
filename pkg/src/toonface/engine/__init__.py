"""Differentiable tensor engine: autograd core, layers, losses, optimizers."""

from .tensor import (
    EngineError,
    Parameter,
    ShapeError,
    Tensor,
    add,
    add_rowvec,
    backward,
    concat,
    dropout,
    flatten,
    leaky_relu,
    matmul,
    reshape,
    scale,
    softmax,
    weighted_sum,
    zero_gradients,
)
from .init import glorot_limit, glorot_uniform, uniform_init
from .layers import (
    ACTIVATIONS,
    BatchNorm,
    BatchNormState,
    Conv2d,
    Dense,
    Dropout,
    MaxPool2d,
    batchnorm_forward,
    conv2d_forward,
    dense_forward,
    maxpool2d_forward,
)
from .losses import masked_squared_error, softmax_cross_entropy
from .optim import Adam, PlateauSchedule, SgdNesterov, plateau_lr_schedule
from .gradcheck import gradients_close, max_gradient_error, numeric_gradient

__all__ = [
    "ACTIVATIONS",
    "Adam",
    "BatchNorm",
    "BatchNormState",
    "Conv2d",
    "Dense",
    "Dropout",
    "EngineError",
    "MaxPool2d",
    "Parameter",
    "PlateauSchedule",
    "SgdNesterov",
    "ShapeError",
    "Tensor",
    "add",
    "add_rowvec",
    "backward",
    "batchnorm_forward",
    "concat",
    "conv2d_forward",
    "dense_forward",
    "dropout",
    "flatten",
    "glorot_limit",
    "glorot_uniform",
    "gradients_close",
    "leaky_relu",
    "masked_squared_error",
    "matmul",
    "max_gradient_error",
    "maxpool2d_forward",
    "numeric_gradient",
    "plateau_lr_schedule",
    "reshape",
    "scale",
    "softmax",
    "softmax_cross_entropy",
    "uniform_init",
    "weighted_sum",
    "zero_gradients",
]
