from .layers import (
    conv_forward,
    conv_backward,
    maxpool_forward,
    maxpool_backward,
    relu_forward,
    relu_backward,
    fc_forward,
    fc_backward,
    dropout,
    softmax_cross_entropy,
)
from .model import (
    ArchitectureSpec,
    LayerSpec,
    Network,
    gradient_check,
    load_checkpoint,
    save_checkpoint,
)
from .presets import ARCHITECTURES, build_architecture

__all__ = [
    "conv_forward",
    "conv_backward",
    "maxpool_forward",
    "maxpool_backward",
    "relu_forward",
    "relu_backward",
    "fc_forward",
    "fc_backward",
    "dropout",
    "softmax_cross_entropy",
    "ArchitectureSpec",
    "LayerSpec",
    "Network",
    "gradient_check",
    "save_checkpoint",
    "load_checkpoint",
    "ARCHITECTURES",
    "build_architecture",
]
