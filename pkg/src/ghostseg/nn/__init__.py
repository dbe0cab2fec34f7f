from .attention import (
    AttentionBlockSpec,
    AttentionGhostBlock,
    ChannelAttention,
    DepthAttention,
    DepthAttentionSpec,
    SpatialAttention,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .ghost import (
    GhostBottleneck,
    GhostBottleneckSpec,
    GhostModule,
    GhostModuleSpec,
    compression_ratio,
    count_parameters,
)
from .initialization import initialize_weights, xavier_init
from .network import (
    AttentionGhostUNetPP,
    NetworkSpec,
    ParameterReport,
    SegmentationOutput,
    build_network,
    fuse_outputs,
    parameter_report,
)

__all__ = [
    "AttentionBlockSpec",
    "AttentionGhostBlock",
    "AttentionGhostUNetPP",
    "ChannelAttention",
    "DepthAttention",
    "DepthAttentionSpec",
    "GhostBottleneck",
    "GhostBottleneckSpec",
    "GhostModule",
    "GhostModuleSpec",
    "NetworkSpec",
    "ParameterReport",
    "SegmentationOutput",
    "SpatialAttention",
    "build_network",
    "compression_ratio",
    "count_parameters",
    "fuse_outputs",
    "initialize_weights",
    "load_checkpoint",
    "parameter_report",
    "save_checkpoint",
    "xavier_init",
]
