"""Training losses: prediction misfit plus the equation-residual penalty.

Norms are area-weighted discrete L2 norms, sqrt(hx*hy * sum |.|^2), the
same convention the solver package uses, so the residual term computed
here matches its ``pde-residual`` output on identical inputs.
"""

from __future__ import annotations

import torch


def channels_to_complex(x: torch.Tensor) -> torch.Tensor:
    """(B, 2, H, W) re/im channels -> complex (B, H, W)."""
    return torch.complex(x[:, 0], x[:, 1])


def field_norm(x: torch.Tensor, cell_area: float) -> torch.Tensor:
    """Per-sample weighted L2 norm of a complex (B, H, W) tensor."""
    return torch.sqrt(cell_area * torch.sum(torch.abs(x) ** 2, dim=(-2, -1)))


def data_loss(u_hat: torch.Tensor, u_label: torch.Tensor, cell_area: float) -> torch.Tensor:
    """Batch mean of || u_hat - u ||."""
    diff = channels_to_complex(u_hat) - channels_to_complex(u_label)
    return field_norm(diff, cell_area).mean()


def pde_residual_norm(
    u_hat: torch.Tensor,
    q: torch.Tensor,
    f: torch.Tensor,
    k: float,
    hx: float,
    hy: float,
) -> torch.Tensor:
    """Per-sample interior norm of  L u + k^2 (1+q) u - f.

    Five-point Laplacian on interior points only (boundary rows never
    enter), matching the solver package's residual convention.
    """
    u = channels_to_complex(u_hat)  # (B, H, W); rows are y, columns x
    fc = channels_to_complex(f)
    core = u[:, 1:-1, 1:-1]
    lap = (u[:, 1:-1, :-2] + u[:, 1:-1, 2:] - 2.0 * core) / hx**2
    lap = lap + (u[:, :-2, 1:-1] + u[:, 2:, 1:-1] - 2.0 * core) / hy**2
    res = lap + (k**2) * (1.0 + q[:, 0, 1:-1, 1:-1]) * core - fc[:, 1:-1, 1:-1]
    return field_norm(res, hx * hy)


def total_loss(
    u_hat: torch.Tensor,
    u_label: torch.Tensor,
    q: torch.Tensor,
    f: torch.Tensor,
    k: float,
    hx: float,
    hy: float,
    lambda_pde: float,
) -> torch.Tensor:
    """data term + lambda * residual term (lambda = 0 drops the residual)."""
    loss = data_loss(u_hat, u_label, hx * hy)
    if lambda_pde > 0.0:
        loss = loss + lambda_pde * pde_residual_norm(u_hat, q, f, k, hx, hy).mean()
    return loss


def relative_l2(u_hat: torch.Tensor, u_label: torch.Tensor) -> torch.Tensor:
    """Per-sample relative L2 error (the weight cancels in the ratio)."""
    diff = channels_to_complex(u_hat) - channels_to_complex(u_label)
    ref = channels_to_complex(u_label)
    num = torch.sqrt(torch.sum(torch.abs(diff) ** 2, dim=(-2, -1)))
    den = torch.sqrt(torch.sum(torch.abs(ref) ** 2, dim=(-2, -1)))
    return num / den
