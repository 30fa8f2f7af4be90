"""Toy-scale matting networks: a multi-stream DensePN head and an STN stub.

Channel counts and stream strides are small defaults chosen so every contract
is checkable on CPU in seconds; the wiring, not the capacity, is the point.
"""

from dataclasses import dataclass

import torch
from torch import nn
from torch.nn import functional as tnf

from .ptmio import write_ptm_file


@dataclass(frozen=True)
class DensePNConfig:
    """Multi-stream pyramid head. Stream i runs at stride 4 * 2**i."""

    num_streams: int = 4
    num_repeats: int = 2
    growth: int = 8
    dense_layers: int = 2
    head_channels: int = 16

    def __post_init__(self):
        if self.num_streams < 2:
            raise ValueError(f"num_streams must be >= 2, got {self.num_streams}")
        if self.num_repeats < 0:
            raise ValueError(f"num_repeats must be >= 0, got {self.num_repeats}")
        for name in ("growth", "dense_layers", "head_channels"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def strides(self):
        return tuple(4 * 2 ** i for i in range(self.num_streams))


@dataclass(frozen=True)
class ToyEncoderConfig:
    """Small residual encoder emitting one feature map per stream stride."""

    stem_channels: int = 16
    stage_channels: tuple = (16, 24, 32, 40)

    def __post_init__(self):
        if self.stem_channels < 1:
            raise ValueError("stem_channels must be positive")
        if not self.stage_channels or any(c < 1 for c in self.stage_channels):
            raise ValueError("stage_channels must be non-empty positive counts")


def _default_encoder_config(num_streams):
    return ToyEncoderConfig(stage_channels=tuple(16 + 8 * i for i in range(num_streams)))


class ResidualBlock(nn.Module):
    def __init__(self, in_channels, out_channels, stride):
        super().__init__()
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, stride=stride, padding=1)
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, padding=1)
        if stride != 1 or in_channels != out_channels:
            self.skip = nn.Conv2d(in_channels, out_channels, 1, stride=stride)
        else:
            self.skip = nn.Identity()
        self.act = nn.LeakyReLU(0.1)

    def forward(self, x):
        y = self.conv2(self.act(self.conv1(x)))
        return self.act(y + self.skip(x))


class ToyEncoder(nn.Module):
    """Stride-2 stem plus one stride-2 residual block per stream: 4/8/16/..."""

    def __init__(self, config: ToyEncoderConfig, in_channels):
        super().__init__()
        self.stem = nn.Conv2d(in_channels, config.stem_channels, 3, stride=2, padding=1)
        self.act = nn.LeakyReLU(0.1)
        blocks = []
        prev = config.stem_channels
        for channels in config.stage_channels:
            blocks.append(ResidualBlock(prev, channels, stride=2))
            prev = channels
        self.blocks = nn.ModuleList(blocks)

    def forward(self, x):
        x = self.act(self.stem(x))
        streams = []
        for block in self.blocks:
            x = block(x)
            streams.append(x)
        return streams


class DenseBlock(nn.Module):
    """Each layer sees every earlier feature; output keeps the input too."""

    def __init__(self, in_channels, growth, layers):
        super().__init__()
        self.convs = nn.ModuleList(
            nn.Conv2d(in_channels + i * growth, growth, 3, padding=1)
            for i in range(layers)
        )
        self.act = nn.LeakyReLU(0.1)
        self.out_channels = in_channels + layers * growth

    def forward(self, x):
        feats = [x]
        for conv in self.convs:
            feats.append(self.act(conv(torch.cat(feats, dim=1))))
        return torch.cat(feats, dim=1)


class FusionLayer(nn.Module):
    """Resample every stream to each target resolution, concat, 1x1 mix."""

    def __init__(self, in_channels_list, out_channels_list):
        super().__init__()
        total = sum(in_channels_list)
        self.mixers = nn.ModuleList(
            nn.Conv2d(total, out_channels, 1) for out_channels in out_channels_list
        )
        self.act = nn.LeakyReLU(0.1)

    def forward(self, streams):
        fused = []
        for mixer, target in zip(self.mixers, streams):
            size = target.shape[-2:]
            gathered = [
                s if s.shape[-2:] == size
                else tnf.interpolate(s, size=size, mode="bilinear", align_corners=False)
                for s in streams
            ]
            fused.append(self.act(mixer(torch.cat(gathered, dim=1))))
        return fused


class DensePNLayer(nn.Module):
    """One repeat: a dense block per stream, then cross-stream fusion."""

    def __init__(self, stream_channels, growth, dense_layers):
        super().__init__()
        self.blocks = nn.ModuleList(
            DenseBlock(c, growth, dense_layers) for c in stream_channels
        )
        self.fusion = FusionLayer(
            [b.out_channels for b in self.blocks], stream_channels)

    def forward(self, streams):
        dense = [block(s) for block, s in zip(self.blocks, streams)]
        return self.fusion(dense)


class DensePN(nn.Module):
    """RGB + unknown-probability in, alpha map at input resolution out."""

    in_channels = 4

    def __init__(self, config: DensePNConfig, encoder_config: ToyEncoderConfig):
        super().__init__()
        if len(encoder_config.stage_channels) != config.num_streams:
            raise ValueError(
                f"encoder emits {len(encoder_config.stage_channels)} streams, "
                f"config wants {config.num_streams}")
        self.config = config
        self.encoder = ToyEncoder(encoder_config, self.in_channels)
        channels = list(encoder_config.stage_channels)
        self.layers = nn.ModuleList(
            DensePNLayer(channels, config.growth, config.dense_layers)
            for _ in range(config.num_repeats)
        )
        self.head_mix = nn.Conv2d(sum(channels), config.head_channels, 1)
        self.head_refine = nn.Conv2d(config.head_channels, config.head_channels, 3, padding=1)
        self.head_out = nn.Conv2d(config.head_channels, 1, 3, padding=1)
        self.act = nn.LeakyReLU(0.1)

    def forward(self, x):
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ValueError(f"expected (N, 4, H, W) input, got {tuple(x.shape)}")
        size = x.shape[-2:]
        streams = self.encoder(x)
        for layer in self.layers:
            streams = layer(streams)
        full = [
            tnf.interpolate(s, size=size, mode="bilinear", align_corners=False)
            for s in streams
        ]
        h = self.act(self.head_mix(torch.cat(full, dim=1)))
        h = self.act(self.head_refine(h))
        return torch.sigmoid(self.head_out(h))

    def stream_parameters(self, index):
        """Parameters of stream index's dense blocks across all repeats."""
        for layer in self.layers:
            yield from layer.blocks[index].parameters()


class STNStub(nn.Module):
    """Small encoder-decoder emitting per-pixel class probabilities.

    Channel order is (background, unknown, foreground), matching the PTM
    plane order.
    """

    def __init__(self, classes=3, width=16):
        super().__init__()
        self.classes = classes
        self.down1 = nn.Conv2d(3, width, 3, stride=2, padding=1)
        self.down2 = nn.Conv2d(width, 2 * width, 3, stride=2, padding=1)
        self.mid = nn.Conv2d(2 * width, 2 * width, 3, padding=1)
        self.dec1 = nn.Conv2d(2 * width, width, 3, padding=1)
        self.dec2 = nn.Conv2d(width, width, 3, padding=1)
        self.out = nn.Conv2d(width, classes, 3, padding=1)
        self.act = nn.LeakyReLU(0.1)

    def forward(self, x):
        d1 = self.act(self.down1(x))
        d2 = self.act(self.down2(d1))
        m = self.act(self.mid(d2))
        u = tnf.interpolate(m, size=d1.shape[-2:], mode="bilinear", align_corners=False)
        u = self.act(self.dec1(u))
        u = tnf.interpolate(u, size=x.shape[-2:], mode="bilinear", align_corners=False)
        u = self.act(self.dec2(u))
        return torch.softmax(self.out(u), dim=1)

    def export_ptm(self, probs, path) -> None:
        """Write one (3, H, W) or (1, 3, H, W) probability tensor as a PTM file."""
        if probs.ndim == 4:
            if probs.shape[0] != 1:
                raise ValueError("export_ptm takes a single sample")
            probs = probs[0]
        if probs.ndim != 3 or probs.shape[0] != 3:
            raise ValueError(f"expected (3, H, W) probabilities, got {tuple(probs.shape)}")
        planes = probs.detach().cpu().to(torch.float32).numpy()
        write_ptm_file(planes[0], planes[1], planes[2], path)


def build_densepn(config: DensePNConfig = None, encoder_config: ToyEncoderConfig = None) -> DensePN:
    """Build the matting head; the default encoder matches config.num_streams."""
    config = config or DensePNConfig()
    if encoder_config is None:
        encoder_config = _default_encoder_config(config.num_streams)
    return DensePN(config, encoder_config)


def build_stn_stub(classes=3) -> STNStub:
    if classes < 2:
        raise ValueError(f"classes must be >= 2, got {classes}")
    return STNStub(classes=classes)
