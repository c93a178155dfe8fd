from .lrp import (
    CropSum,
    Egonet,
    LrpFeatures,
    LrpModel,
    extract_egonet,
    featurize,
    lrp_feature_sum,
    lrp_forward,
    lrp_gradient,
)
from .mpnn import MpnnLayer, MpnnParams, mpnn_forward
from .train import TrainConfig, TrainResult, train_lrp

__all__ = [
    "CropSum",
    "Egonet",
    "LrpFeatures",
    "LrpModel",
    "MpnnLayer",
    "MpnnParams",
    "TrainConfig",
    "TrainResult",
    "extract_egonet",
    "featurize",
    "lrp_feature_sum",
    "lrp_forward",
    "lrp_gradient",
    "mpnn_forward",
    "train_lrp",
]
