"""U-shaped neural operator: multiscale encoder, Fourier skips, fused decoder.

Three resolutions (full, half, quarter).  Each level runs an encoding
block (double 3x3 convolution, coordinate-channel concat, a shallow
convolution module of stacked 3x3/1x1 layers); levels are fused downward
by stride-2 convolutions with doubled channels followed by 1x1 merges.
Per level a stack of Fourier layers forms the skip connection; the
decoder walks back up with stride-2 transpose convolutions (halved
channels), concatenation and 1x1 merges, ending in a single 3x3
convolution to the 2 output channels.  Finer levels carry fewer
channels, which is what keeps the cost below a single-scale spectral
network of matched parameter count.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .spectral import FourierLayer, ModeConfigError


def _coord_channels(x: torch.Tensor) -> torch.Tensor:
    batch, _, height, width = x.shape
    ys = torch.linspace(0.0, 1.0, height, dtype=x.dtype, device=x.device)
    xs = torch.linspace(0.0, 1.0, width, dtype=x.dtype, device=x.device)
    Y, X = torch.meshgrid(ys, xs, indexing="ij")
    coords = torch.stack([X, Y]).expand(batch, 2, height, width)
    return torch.cat([x, coords], dim=1)


class ShallowConvModule(nn.Module):
    """Two stacks of 3x3 followed by 1x1 convolutions."""

    def __init__(self, in_channels: int, channels: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(in_channels, channels, 3, padding=1), nn.GELU(),
            nn.Conv2d(channels, channels, 1), nn.GELU(),
            nn.Conv2d(channels, channels, 3, padding=1), nn.GELU(),
            nn.Conv2d(channels, channels, 1),
        )

    def forward(self, x):
        return self.net(x)


class EncodingBlock(nn.Module):
    """Double convolution, coordinate concat, shallow convolution module."""

    def __init__(self, in_channels: int, channels: int):
        super().__init__()
        self.double_conv = nn.Sequential(
            nn.Conv2d(in_channels, channels, 3, padding=1), nn.GELU(),
            nn.Conv2d(channels, channels, 3, padding=1),
        )
        self.scm = ShallowConvModule(channels + 2, channels)

    def forward(self, x):
        return self.scm(_coord_channels(self.double_conv(x)))


class UNO2d(nn.Module):
    """Multiscale operator block; needs H and W divisible by 4."""

    def __init__(
        self,
        in_channels: int,
        modes: int,
        grid_hw: tuple[int, int],
        channels: tuple[int, int, int] = (8, 16, 32),
        depth: int = 3,
        out_channels: int = 2,
    ):
        super().__init__()
        height, width = grid_hw
        if height % 4 or width % 4:
            raise ModeConfigError(
                f"multiscale operator needs H, W divisible by 4, got {height}x{width}"
            )
        c0, c1, c2 = channels
        self.encode0 = EncodingBlock(in_channels, c0)
        self.encode1 = EncodingBlock(in_channels, c1)
        self.encode2 = EncodingBlock(in_channels, c2)
        # downward fusion: stride-2 conv doubling channels, then 1x1 merge
        self.down01 = nn.Conv2d(c0, 2 * c0, 3, stride=2, padding=1)
        self.merge1 = nn.Conv2d(2 * c0 + c1, c1, 1)
        self.down12 = nn.Conv2d(c1, 2 * c1, 3, stride=2, padding=1)
        self.merge2 = nn.Conv2d(2 * c1 + c2, c2, 1)
        # Fourier-layer skips, modes clipped to each level's resolution
        sizes = [(height, width), (height // 2, width // 2), (height // 4, width // 4)]
        self.skips = nn.ModuleList(
            nn.Sequential(
                *[
                    FourierLayer(c, min(modes, h // 2), min(modes, w // 2))
                    for _ in range(depth)
                ]
            )
            for c, (h, w) in zip(channels, sizes)
        )
        # decoder: transpose conv halving channels, concat, 1x1 merge
        self.up21 = nn.ConvTranspose2d(c2, c2 // 2, 2, stride=2)
        self.demerge1 = nn.Conv2d(c2 // 2 + c1, c1, 1)
        self.up10 = nn.ConvTranspose2d(c1, c1 // 2, 2, stride=2)
        self.demerge0 = nn.Conv2d(c1 // 2 + c0, c0, 1)
        self.decode = nn.Conv2d(c0, out_channels, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x_half = F.avg_pool2d(x, 2)
        x_quarter = F.avg_pool2d(x, 4)
        e0 = self.encode0(x)
        e1 = self.merge1(torch.cat([self.down01(e0), self.encode1(x_half)], dim=1))
        e2 = self.merge2(torch.cat([self.down12(e1), self.encode2(x_quarter)], dim=1))
        s0 = self.skips[0](e0)
        s1 = self.skips[1](e1)
        s2 = self.skips[2](e2)
        d1 = self.demerge1(torch.cat([self.up21(s2), s1], dim=1))
        d0 = self.demerge0(torch.cat([self.up10(d1), s0], dim=1))
        return self.decode(d0)
