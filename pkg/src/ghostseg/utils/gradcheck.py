"""Central finite differences against autograd.

``fn`` must rebuild its scalar output from the current tensor values on every
call; tensors are perturbed in place and restored.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import torch


@dataclass(frozen=True)
class GradientCheck:
    relative_error: float
    checked: int

    def passed(self, tolerance: float) -> bool:
        return self.relative_error < tolerance


def relative_error(a: torch.Tensor, b: torch.Tensor) -> float:
    """||a - b|| / max(||a||, ||b||), zero when both vanish."""
    a = a.detach().double().reshape(-1)
    b = b.detach().double().reshape(-1)
    scale = max(float(a.norm()), float(b.norm()))
    if scale == 0.0:
        return 0.0
    return float((a - b).norm()) / scale


def numerical_gradient(fn: Callable[[], torch.Tensor], tensor: torch.Tensor, eps: float = 1e-6) -> torch.Tensor:
    grad = torch.zeros_like(tensor, dtype=torch.float64)
    flat = tensor.detach().view(-1)
    grad_flat = grad.view(-1)
    with torch.no_grad():
        for i in range(flat.numel()):
            original = flat[i].item()
            flat[i] = original + eps
            plus = float(fn())
            flat[i] = original - eps
            minus = float(fn())
            flat[i] = original
            grad_flat[i] = (plus - minus) / (2.0 * eps)
    return grad


def check_gradients(
    fn: Callable[[], torch.Tensor],
    tensors: Sequence[torch.Tensor],
    eps: float = 1e-6,
    fraction: float = 1.0,
    seed: int = 0,
) -> GradientCheck:
    """Compare autograd with central differences on all (or a sampled ``fraction`` of) entries."""
    tensors = list(tensors)
    analytic = torch.autograd.grad(fn(), tensors, allow_unused=True)
    generator = torch.Generator().manual_seed(seed)

    autograd_values: list[float] = []
    numeric_values: list[float] = []
    with torch.no_grad():
        for tensor, grad in zip(tensors, analytic):
            flat = tensor.detach().view(-1)
            grad_flat = grad.reshape(-1) if grad is not None else torch.zeros(flat.numel(), dtype=torch.float64)
            count = flat.numel()
            if fraction < 1.0:
                picks = torch.randperm(count, generator=generator)[: max(1, round(fraction * count))].tolist()
            else:
                picks = range(count)
            for i in picks:
                original = flat[i].item()
                flat[i] = original + eps
                plus = float(fn())
                flat[i] = original - eps
                minus = float(fn())
                flat[i] = original
                numeric_values.append((plus - minus) / (2.0 * eps))
                autograd_values.append(float(grad_flat[i]))

    error = relative_error(
        torch.tensor(autograd_values, dtype=torch.float64), torch.tensor(numeric_values, dtype=torch.float64)
    )
    return GradientCheck(error, len(numeric_values))
