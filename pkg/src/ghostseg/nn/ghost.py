"""Ghost module and ghost bottleneck layers.

A ghost module produces ``out_channels / ratio_s`` intrinsic maps with a dense
primary convolution and derives the remaining maps from them with a
per-channel (depthwise) cheap convolution. Spatial resolution is kept; only
``stride`` changes it.
"""

from dataclasses import dataclass

import torch
from torch import nn

from ..core.exceptions import ConfigurationError


def _check_odd(value: int, name: str) -> None:
    if value < 1 or value % 2 == 0:
        raise ConfigurationError(f"{name} must be a positive odd size, got {value}")  # noqa: TRY003


@dataclass(frozen=True)
class GhostModuleSpec:
    """Shape and kernel parameters of one ghost module."""

    in_channels: int
    out_channels: int
    ratio_s: int = 2
    primary_kernel: int = 1
    cheap_kernel: int = 3
    stride: int = 1
    relu: bool = True

    def __post_init__(self):
        if self.in_channels < 1 or self.out_channels < 1:
            raise ConfigurationError(  # noqa: TRY003
                f"Channel counts must be positive, got in={self.in_channels} out={self.out_channels}"
            )
        if self.ratio_s < 1:
            raise ConfigurationError(f"ratio_s must be >= 1, got {self.ratio_s}")  # noqa: TRY003
        if self.out_channels % self.ratio_s != 0:
            raise ConfigurationError(  # noqa: TRY003
                f"out_channels={self.out_channels} is not divisible by ratio_s={self.ratio_s}"
            )
        _check_odd(self.primary_kernel, "primary_kernel")
        _check_odd(self.cheap_kernel, "cheap_kernel")
        if self.stride not in (1, 2):
            raise ConfigurationError(f"stride must be 1 or 2, got {self.stride}")  # noqa: TRY003

    @property
    def intrinsic_channels(self) -> int:
        return self.out_channels // self.ratio_s

    @property
    def ghost_channels(self) -> int:
        return self.out_channels - self.intrinsic_channels

    def parameter_count(self, include_norm: bool = False) -> int:
        """Exact number of learnable values; convolutions carry no bias."""
        primary = self.in_channels * self.intrinsic_channels * self.primary_kernel**2
        cheap = self.ghost_channels * self.cheap_kernel**2
        norm = 2 * self.out_channels if include_norm else 0
        return primary + cheap + norm

    def dense_parameter_count(self, include_norm: bool = False) -> int:
        """Parameters of a dense convolution with the same in/out channels and primary kernel."""
        dense = self.in_channels * self.out_channels * self.primary_kernel**2
        return dense + (2 * self.out_channels if include_norm else 0)

    @property
    def is_compressive(self) -> bool:
        # ghost < dense  <=>  in * k_p^2 > k_c^2, whenever ratio_s > 1
        return self.ratio_s > 1 and self.in_channels * self.primary_kernel**2 > self.cheap_kernel**2


def compression_ratio(spec: GhostModuleSpec) -> float:
    """Dense-convolution parameters divided by ghost-module parameters."""
    return spec.dense_parameter_count() / spec.parameter_count()


def count_parameters(target: GhostModuleSpec | nn.Module) -> int:
    """Exact parameter count of a ghost spec (convolution weights) or of a built module."""
    if isinstance(target, GhostModuleSpec):
        return target.parameter_count()
    return sum(p.numel() for p in target.parameters())


class GhostModule(nn.Module):
    """Primary dense convolution plus cheap depthwise convolution, concatenated."""

    def __init__(self, spec: GhostModuleSpec):
        super().__init__()
        self.spec = spec
        intrinsic = spec.intrinsic_channels

        self.primary_conv = nn.Sequential(
            nn.Conv2d(
                spec.in_channels,
                intrinsic,
                spec.primary_kernel,
                spec.stride,
                spec.primary_kernel // 2,
                bias=False,
            ),
            nn.BatchNorm2d(intrinsic),
            nn.ReLU() if spec.relu else nn.Identity(),
        )

        # ratio_s == 1 degenerates to a plain dense convolution
        self.cheap_operation: nn.Sequential | None = None
        if spec.ghost_channels > 0:
            self.cheap_operation = nn.Sequential(
                nn.Conv2d(
                    intrinsic,
                    spec.ghost_channels,
                    spec.cheap_kernel,
                    1,
                    spec.cheap_kernel // 2,
                    groups=intrinsic,
                    bias=False,
                ),
                nn.BatchNorm2d(spec.ghost_channels),
                nn.ReLU() if spec.relu else nn.Identity(),
            )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() != 4 or x.shape[1] != self.spec.in_channels:
            raise ConfigurationError(  # noqa: TRY003
                f"Ghost module expects {self.spec.in_channels} input channels, got shape {tuple(x.shape)}"
            )
        intrinsic = self.primary_conv(x)
        if self.cheap_operation is None:
            return intrinsic
        ghost = self.cheap_operation(intrinsic)
        return torch.cat([intrinsic, ghost], dim=1)


@dataclass(frozen=True)
class GhostBottleneckSpec:
    """Expand -> (strided depthwise) -> project ghost pair with a residual shortcut."""

    in_channels: int
    out_channels: int
    stride: int = 1
    expansion_channels: int | None = None
    ratio_s: int = 2
    primary_kernel: int = 1
    cheap_kernel: int = 3

    def __post_init__(self):
        if self.stride not in (1, 2):
            raise ConfigurationError(f"stride must be 1 or 2, got {self.stride}")  # noqa: TRY003
        if self.expansion_channels is not None and self.expansion_channels < 1:
            raise ConfigurationError(  # noqa: TRY003
                f"expansion_channels must be positive, got {self.expansion_channels}"
            )
        # building the module specs validates channel/ratio compatibility
        _ = self.expand, self.project

    @property
    def hidden_channels(self) -> int:
        return self.expansion_channels if self.expansion_channels is not None else 2 * self.out_channels

    @property
    def expand(self) -> GhostModuleSpec:
        return GhostModuleSpec(
            self.in_channels,
            self.hidden_channels,
            ratio_s=self.ratio_s,
            primary_kernel=self.primary_kernel,
            cheap_kernel=self.cheap_kernel,
            relu=True,
        )

    @property
    def project(self) -> GhostModuleSpec:
        return GhostModuleSpec(
            self.hidden_channels,
            self.out_channels,
            ratio_s=self.ratio_s,
            primary_kernel=self.primary_kernel,
            cheap_kernel=self.cheap_kernel,
            relu=False,
        )

    @property
    def has_identity_shortcut(self) -> bool:
        return self.stride == 1 and self.in_channels == self.out_channels

    def parameter_count(self) -> int:
        """Analytic count including normalization scale/shift."""
        total = self.expand.parameter_count(include_norm=True) + self.project.parameter_count(include_norm=True)
        if self.stride == 2:
            total += self.hidden_channels * 9 + 2 * self.hidden_channels
        if not self.has_identity_shortcut:
            if self.stride == 2:
                total += self.in_channels * 9 + 2 * self.in_channels
            total += self.in_channels * self.out_channels + 2 * self.out_channels
        return total


class GhostBottleneck(nn.Module):
    """Residual ghost bottleneck; no activation after the project module or the residual add."""

    def __init__(self, spec: GhostBottleneckSpec):
        super().__init__()
        self.spec = spec
        hidden = spec.hidden_channels

        self.ghost1 = GhostModule(spec.expand)

        self.conv_dw: nn.Sequential | None = None
        if spec.stride == 2:
            self.conv_dw = nn.Sequential(
                nn.Conv2d(hidden, hidden, 3, 2, 1, groups=hidden, bias=False),
                nn.BatchNorm2d(hidden),
            )

        self.ghost2 = GhostModule(spec.project)

        if spec.has_identity_shortcut:
            self.shortcut: nn.Module = nn.Identity()
        else:
            layers: list[nn.Module] = []
            if spec.stride == 2:
                layers += [
                    nn.Conv2d(spec.in_channels, spec.in_channels, 3, 2, 1, groups=spec.in_channels, bias=False),
                    nn.BatchNorm2d(spec.in_channels),
                ]
            layers += [
                nn.Conv2d(spec.in_channels, spec.out_channels, 1, 1, 0, bias=False),
                nn.BatchNorm2d(spec.out_channels),
            ]
            self.shortcut = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = self.ghost1(x)
        if self.conv_dw is not None:
            out = self.conv_dw(out)
        out = self.ghost2(out)
        residual = self.shortcut(x)
        if residual.shape != out.shape:
            raise ConfigurationError(  # noqa: TRY003
                f"Residual shape {tuple(residual.shape)} does not match block output {tuple(out.shape)}"
            )
        return out + residual
