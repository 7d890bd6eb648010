from __future__ import annotations

import math
from dataclasses import dataclass

import torch

from fvin.common.errors import DimMismatch


@dataclass(frozen=True, slots=True)
class MLPSpec:
    """Layer widths of a tanh MLP whose weights live in a flat parameter slice.

    Each layer contributes a row-major ``(d_out, d_in)`` weight followed by a
    ``d_out`` bias; the last layer is affine.
    """

    layer_dims: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.layer_dims) < 2 or any(int(d) < 1 for d in self.layer_dims):
            raise DimMismatch(f"invalid layer dims: {self.layer_dims}")

    @property
    def in_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def out_dim(self) -> int:
        return self.layer_dims[-1]

    @property
    def n_params(self) -> int:
        dims = self.layer_dims
        return sum(d_in * d_out + d_out for d_in, d_out in zip(dims[:-1], dims[1:]))

    def unpack(self, flat: torch.Tensor) -> list[tuple[torch.Tensor, torch.Tensor]]:
        if flat.shape != (self.n_params,):
            raise DimMismatch(f"MLP {self.layer_dims} needs {self.n_params} parameters, got {tuple(flat.shape)}")
        layers = []
        offset = 0
        for d_in, d_out in zip(self.layer_dims[:-1], self.layer_dims[1:]):
            W = flat[offset : offset + d_in * d_out].view(d_out, d_in)
            offset += d_in * d_out
            b = flat[offset : offset + d_out]
            offset += d_out
            layers.append((W, b))
        return layers

    def initial_params(self, generator: torch.Generator) -> torch.Tensor:
        """Weights uniform in +-1/sqrt(fan_in), zero biases."""
        chunks = []
        for d_in, d_out in zip(self.layer_dims[:-1], self.layer_dims[1:]):
            bound = 1.0 / math.sqrt(d_in)
            W = torch.rand(d_out * d_in, generator=generator, dtype=torch.float64) * (2.0 * bound) - bound
            chunks.extend((W, torch.zeros(d_out, dtype=torch.float64)))
        return torch.cat(chunks)


def mlp_forward(spec: MLPSpec, params: torch.Tensor, inp: torch.Tensor) -> torch.Tensor:
    if inp.shape[-1] != spec.in_dim:
        raise DimMismatch(f"MLP expects input dimension {spec.in_dim}, got {inp.shape[-1]}")
    layers = spec.unpack(params)
    out = inp
    for i, (W, b) in enumerate(layers):
        out = out @ W.transpose(0, 1) + b
        if i < len(layers) - 1:
            out = torch.tanh(out)
    return out
