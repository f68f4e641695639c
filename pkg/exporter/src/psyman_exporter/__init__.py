"""Bridges a VGG16 rating model to the psyman analysis tools via files."""

from .export import (
    ExportManifest,
    conv_feature_layers,
    export_cam_inputs,
    export_predictions,
    file_digest,
    fnv1a64_hex,
)
from .faces import face_dataset, save_png, synthetic_face
from .model import (
    IMAGENET_MEAN,
    IMAGENET_STD,
    Preprocess,
    build_model,
    default_preprocess,
    fine_tune_head,
    load_image,
)
from .pst import read_pst, tensor_bytes, write_pst

__all__ = [
    "ExportManifest",
    "IMAGENET_MEAN",
    "IMAGENET_STD",
    "Preprocess",
    "build_model",
    "conv_feature_layers",
    "default_preprocess",
    "export_cam_inputs",
    "export_predictions",
    "face_dataset",
    "file_digest",
    "fine_tune_head",
    "fnv1a64_hex",
    "load_image",
    "read_pst",
    "save_png",
    "synthetic_face",
    "tensor_bytes",
    "write_pst",
]
