"""Model variants: direct operators and the Neumann-series chaining.

All four variants share one contract: ``model(q, f) -> u_hat`` with
q (B, 1, H, W), f and u_hat (B, 2, H, W) as real/imaginary channels.

The series variants chain ``ns_blocks`` independent copies of the
homogeneous-solve surrogate: block 0 sees only f, block n sees the
pointwise product -k^2 q * v_{n-1}, and the prediction is the sum of all
block outputs (each block mirrors one series term, so q and f stay
decoupled).  The direct variants feed the concatenated (q, f) channels
through a single operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torch import nn

from .spectral import FNO2d
from .uno import UNO2d

VARIANTS = ("fno", "uno", "ns_fno", "ns_uno")


@dataclass(frozen=True)
class NetworkConfig:
    variant: str
    k_max: int = 12
    width: int = 32  # single-scale channel dimension
    uno_channels: tuple = (8, 16, 32)  # fine -> coarse
    fno_depth: int = 4
    uno_depth: int = 3
    ns_blocks: int = 3

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.k_max < 1 or self.ns_blocks < 1:
            raise ValueError("k_max and ns_blocks must be >= 1")
        if self.width < 1 or any(c < 1 for c in self.uno_channels):
            raise ValueError("channel counts must be >= 1")


def _build_block(cfg: NetworkConfig, in_channels: int, grid_hw) -> nn.Module:
    if cfg.variant.endswith("uno"):
        return UNO2d(
            in_channels,
            cfg.k_max,
            grid_hw,
            channels=tuple(cfg.uno_channels),
            depth=cfg.uno_depth,
        )
    modes = min(cfg.k_max, grid_hw[0] // 2, grid_hw[1] // 2)
    return FNO2d(in_channels, modes, width=cfg.width, depth=cfg.fno_depth)


class DirectModel(nn.Module):
    """Single operator acting on the concatenated (q, f) channels."""

    def __init__(self, cfg: NetworkConfig, grid_hw):
        super().__init__()
        self.cfg = cfg
        self.block = _build_block(cfg, 3, grid_hw)

    def forward(self, q, f, return_intermediates=False):
        out = self.block(torch.cat([q, f], dim=1))
        return (out, [out]) if return_intermediates else out


class NeumannSeriesModel(nn.Module):
    """Chained surrogate blocks along the series recursion."""

    def __init__(self, cfg: NetworkConfig, grid_hw, k: float):
        super().__init__()
        self.cfg = cfg
        self.k = float(k)
        self.blocks = nn.ModuleList(
            _build_block(cfg, 2, grid_hw) for _ in range(cfg.ns_blocks)
        )

    def forward(self, q, f, return_intermediates=False):
        v = self.blocks[0](f)
        outs = [v]
        kq = -(self.k**2) * q  # (B, 1, H, W), broadcasts over re/im
        for block in self.blocks[1:]:
            v = block(kq * v)
            outs.append(v)
        u_hat = outs[0]
        for term in outs[1:]:
            u_hat = u_hat + term
        return (u_hat, outs) if return_intermediates else u_hat


def build_model(cfg: NetworkConfig, grid_hw, k: float) -> nn.Module:
    """Instantiate a variant for a given grid shape (H, W) and wavenumber."""
    if cfg.variant.startswith("ns_"):
        return NeumannSeriesModel(cfg, grid_hw, k)
    return DirectModel(cfg, grid_hw)


def parameter_count(model: nn.Module) -> int:
    """Real-valued parameter count (complex tensors count twice)."""
    total = 0
    for p in model.parameters():
        total += p.numel() * (2 if p.is_complex() else 1)
    return total
