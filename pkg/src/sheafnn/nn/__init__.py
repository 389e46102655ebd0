"""Differentiable graph and sheaf layers on a numpy tape."""

from .layers import (
    BatchThenLayerNorm,
    GNNLayer,
    GraphContext,
    LayerSpec,
    SheafLayer,
    dropout,
    gat_attention,
    gat_conv,
    gcn_conv,
    learn_restriction_maps,
    sage_conv,
    sheaf_diffusion,
    simple_laplacian_conv,
)
from .model import Model, build_model, layer_specs
from .tape import Param, Tape, Var

__all__ = [
    "BatchThenLayerNorm",
    "GNNLayer",
    "GraphContext",
    "LayerSpec",
    "Model",
    "Param",
    "SheafLayer",
    "Tape",
    "Var",
    "build_model",
    "dropout",
    "gat_attention",
    "gat_conv",
    "gcn_conv",
    "layer_specs",
    "learn_restriction_maps",
    "sage_conv",
    "sheaf_diffusion",
    "simple_laplacian_conv",
]
