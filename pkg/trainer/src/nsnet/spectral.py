"""Fourier layers: truncated spectral convolution plus pointwise linear path.

One layer computes  GELU( IFFT(R . FFT(z)) + W z + b )  where R keeps
only the lowest ``modes`` frequencies per retained quadrant of the
real-input transform (the positive-frequency corner and its negative
row-frequency mirror), parameterized as complex weight tensors.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn


class ModeConfigError(ValueError):
    """Requested spectral modes do not fit the input resolution."""


class SpectralConv2d(nn.Module):
    """Truncated-mode spectral convolution on (batch, C, H, W) tensors."""

    def __init__(self, in_channels: int, out_channels: int, modes1: int, modes2: int):
        super().__init__()
        if modes1 < 1 or modes2 < 1:
            raise ModeConfigError("need at least one retained mode per axis")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.modes1 = modes1
        self.modes2 = modes2
        scale = 1.0 / (in_channels * out_channels)
        shape = (in_channels, out_channels, modes1, modes2)
        self.weight_pos = nn.Parameter(scale * torch.randn(*shape, dtype=torch.cfloat))
        self.weight_neg = nn.Parameter(scale * torch.randn(*shape, dtype=torch.cfloat))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        batch, _, height, width = x.shape
        if self.modes1 > height // 2 or self.modes2 > width // 2:
            raise ModeConfigError(
                f"{self.modes1}x{self.modes2} modes exceed half resolution "
                f"of a {height}x{width} input"
            )
        x_ft = torch.fft.rfft2(x)
        out_ft = torch.zeros(
            batch, self.out_channels, height, width // 2 + 1,
            dtype=x_ft.dtype, device=x.device,
        )
        m1, m2 = self.modes1, self.modes2
        out_ft[:, :, :m1, :m2] = torch.einsum(
            "bixy,ioxy->boxy", x_ft[:, :, :m1, :m2], self.weight_pos.to(x_ft.dtype)
        )
        out_ft[:, :, -m1:, :m2] = torch.einsum(
            "bixy,ioxy->boxy", x_ft[:, :, -m1:, :m2], self.weight_neg.to(x_ft.dtype)
        )
        return torch.fft.irfft2(out_ft, s=(height, width))


class FourierLayer(nn.Module):
    """Spectral path plus pointwise linear path, GELU-activated."""

    def __init__(self, channels: int, modes1: int, modes2: int | None = None):
        super().__init__()
        self.spectral = SpectralConv2d(channels, channels, modes1, modes2 or modes1)
        self.pointwise = nn.Conv2d(channels, channels, kernel_size=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return F.gelu(self.spectral(x) + self.pointwise(x))


class FNO2d(nn.Module):
    """Lift, a stack of Fourier layers, project to 2 output channels."""

    def __init__(
        self,
        in_channels: int,
        modes: int,
        width: int = 32,
        depth: int = 4,
        out_channels: int = 2,
    ):
        super().__init__()
        self.lift = nn.Conv2d(in_channels, width, kernel_size=1)
        self.layers = nn.ModuleList(FourierLayer(width, modes) for _ in range(depth))
        self.proj_hidden = nn.Conv2d(width, 128, kernel_size=1)
        self.proj_out = nn.Conv2d(128, out_channels, kernel_size=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        z = self.lift(x)
        for layer in self.layers:
            z = layer(z)
        return self.proj_out(F.gelu(self.proj_hidden(z)))
