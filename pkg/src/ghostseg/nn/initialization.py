import torch
from torch import nn

from ..core.exceptions import ConfigurationError


def xavier_init(shape: tuple[int, ...], seed: int, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """Uniform draw on +/- sqrt(6 / (fan_in + fan_out)), reproducible from ``seed``."""
    if len(shape) < 2:
        raise ConfigurationError(f"Xavier initialization needs at least 2 dims, got shape {tuple(shape)}")  # noqa: TRY003
    generator = torch.Generator().manual_seed(seed)
    return nn.init.xavier_uniform_(torch.empty(tuple(shape), dtype=dtype), generator=generator)


def initialize_weights(net: nn.Module, seed: int) -> nn.Module:
    """Xavier for convolutions, 1/0 scale/shift for normalization, zero gates for attention."""
    generator = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for module in net.modules():
            if isinstance(module, (nn.Conv2d, nn.Linear)):
                nn.init.xavier_uniform_(module.weight, generator=generator)
                if module.bias is not None:
                    nn.init.zeros_(module.bias)
            elif isinstance(module, nn.BatchNorm2d):
                module.reset_running_stats()
                module.reset_parameters()

    for module in net.modules():
        reset_gates = getattr(module, "reset_gates", None)
        if callable(reset_gates):
            reset_gates()
    return net
