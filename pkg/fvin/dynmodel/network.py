from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import torch

from fvin.common.config import ForceConvention
from fvin.common.errors import DimMismatch, SchemaError
from fvin.integrator.models import DiscreteForces

from .base import PotentialEval, check_control, flatten_configuration
from .mlp import MLPSpec, mlp_forward

DEFAULT_EPSILON = 0.01
MASS_FLOOR = 1e-3


def inertia_from_cholesky(l6: torch.Tensor, epsilon: float) -> torch.Tensor:
    """J = L L^T + epsilon I with L filled row by row from the 6 lower-triangular entries."""
    L = _fill_tril(l6)
    J = L @ L.transpose(-1, -2)
    eye = torch.eye(3, dtype=l6.dtype, device=l6.device)
    return 0.5 * (J + J.transpose(-1, -2)) + epsilon * eye


def _fill_tril(l6: torch.Tensor) -> torch.Tensor:
    rows = []
    k = 0
    for i in range(3):
        entries = [l6[..., k + j] for j in range(i + 1)]
        k += i + 1
        entries += [torch.zeros_like(l6[..., 0])] * (2 - i)
        rows.append(torch.stack(entries, dim=-1))
    return torch.stack(rows, dim=-2)


@dataclass(frozen=True)
class NetworkModel:
    """Learnable dynamics: mass, Cholesky-factored inertia, potential and input gains.

    All parameters live in one flat float64 vector laid out in declaration
    order: mass ``r`` (SE(3) only), inertia (6 constants on SE(3), an L-network
    on SO(3)), potential network, gain network. A model without a gain network
    is the unforced variant and returns zero forces.
    """

    convention: ForceConvention
    potential_net: MLPSpec
    params: torch.Tensor
    inertia_net: Optional[MLPSpec] = None
    gains_net: Optional[MLPSpec] = None
    epsilon: float = DEFAULT_EPSILON
    seed: Optional[int] = None
    _slices: dict[str, slice] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        conv = self.convention
        if self.potential_net.in_dim != conv.q_dim or self.potential_net.out_dim != 1:
            raise DimMismatch(f"potential network must map {conv.q_dim} -> 1, got {self.potential_net.layer_dims}")
        if conv is ForceConvention.PENDULUM_SO3:
            if self.inertia_net is None:
                raise DimMismatch("SO(3) models need an inertia network")
            if self.inertia_net.in_dim != conv.q_dim or self.inertia_net.out_dim != 6:
                raise DimMismatch(f"inertia network must map {conv.q_dim} -> 6, got {self.inertia_net.layer_dims}")
        elif self.inertia_net is not None:
            raise DimMismatch("SE(3) models use a constant inertia factor, not a network")
        if self.gains_net is not None:
            expected = 3 * conv.u_dim * (2 if conv.translational else 1)
            if self.gains_net.in_dim != conv.q_dim or self.gains_net.out_dim != expected:
                raise DimMismatch(f"gain network must map {conv.q_dim} -> {expected}, got {self.gains_net.layer_dims}")
        if not self.epsilon > 0:
            raise SchemaError(f"epsilon must be positive, got {self.epsilon}")

        slices: dict[str, slice] = {}
        offset = 0
        for name, size in self.component_sizes().items():
            slices[name] = slice(offset, offset + size)
            offset += size
        if self.params.shape != (offset,):
            raise DimMismatch(f"model needs {offset} parameters, got {tuple(self.params.shape)}")
        object.__setattr__(self, "_slices", slices)

    @classmethod
    def initialize(
        cls,
        convention: ForceConvention,
        *,
        hidden: Sequence[int] = (10, 10, 10),
        seed: int = 0,
        forced: bool = True,
        epsilon: float = DEFAULT_EPSILON,
        inertia_init: float = 1.0,
    ) -> "NetworkModel":
        conv = convention
        hidden = tuple(int(w) for w in hidden)
        potential_net = MLPSpec((conv.q_dim, *hidden, 1))
        inertia_net = MLPSpec((conv.q_dim, *hidden, 6)) if conv is ForceConvention.PENDULUM_SO3 else None
        gains_out = 3 * conv.u_dim * (2 if conv.translational else 1)
        gains_net = MLPSpec((conv.q_dim, *hidden, gains_out)) if forced else None

        generator = torch.Generator().manual_seed(seed)
        chunks = []
        if conv.translational:
            chunks.append(torch.ones(1, dtype=torch.float64))
            l6 = torch.zeros(6, dtype=torch.float64)
            l6[[0, 2, 5]] = math.sqrt(inertia_init)
            chunks.append(l6)
        else:
            chunks.append(inertia_net.initial_params(generator))
        chunks.append(potential_net.initial_params(generator))
        if gains_net is not None:
            chunks.append(gains_net.initial_params(generator))

        return cls(
            convention=conv,
            potential_net=potential_net,
            params=torch.cat(chunks),
            inertia_net=inertia_net,
            gains_net=gains_net,
            epsilon=epsilon,
            seed=seed,
        )

    def component_sizes(self) -> dict[str, int]:
        sizes: dict[str, int] = {}
        if self.convention.translational:
            sizes["mass"] = 1
            sizes["inertia"] = 6
        else:
            sizes["inertia"] = self.inertia_net.n_params
        sizes["potential"] = self.potential_net.n_params
        if self.gains_net is not None:
            sizes["gains"] = self.gains_net.n_params
        return sizes

    def component(self, name: str) -> torch.Tensor:
        return self.params[self._slices[name]]

    def with_params(self, params: torch.Tensor) -> "NetworkModel":
        return replace(self, params=params)

    @property
    def forced(self) -> bool:
        return self.gains_net is not None

    # DynamicsModel

    def mass(self, x: torch.Tensor, R: torch.Tensor) -> torch.Tensor:
        batch = torch.broadcast_shapes(x.shape[:-1], R.shape[:-2])
        if not self.convention.translational:
            return torch.ones(batch, dtype=R.dtype)
        r = self.component("mass")[0]
        return (r.abs().clamp_min(MASS_FLOOR) ** 2).expand(batch)

    def inertia(self, x: torch.Tensor, R: torch.Tensor) -> torch.Tensor:
        if self.inertia_net is None:
            batch = torch.broadcast_shapes(x.shape[:-1], R.shape[:-2])
            return inertia_from_cholesky(self.component("inertia"), self.epsilon).expand(*batch, 3, 3)
        q = flatten_configuration(self.convention, x, R)
        return inertia_from_cholesky(mlp_forward(self.inertia_net, self.component("inertia"), q), self.epsilon)

    def potential(self, x: torch.Tensor, R: torch.Tensor) -> PotentialEval:
        """Network output U(q) and its exact gradient with R taken as 9 free entries."""
        build_graph = torch.is_grad_enabled()
        q = flatten_configuration(self.convention, x, R)
        with torch.enable_grad():
            q_in = q if q.requires_grad else q.detach().requires_grad_(True)
            U = mlp_forward(self.potential_net, self.component("potential"), q_in)[..., 0]
            (grad,) = torch.autograd.grad(U.sum(), q_in, create_graph=build_graph)
        if not build_graph:
            U, grad = U.detach(), grad.detach()
        if self.convention.translational:
            return PotentialEval(U, grad[..., :3], grad[..., 3:].unflatten(-1, (3, 3)))
        return PotentialEval(U, torch.zeros_like(grad[..., :3]), grad.unflatten(-1, (3, 3)))

    def gains(self, x: torch.Tensor, R: torch.Tensor) -> torch.Tensor:
        """g(q): (..., 3) on SO(3); (..., 6, u_dim) stacking g_x over g_R on SE(3)."""
        if self.gains_net is None:
            raise DimMismatch("unforced model has no gain network")
        out = mlp_forward(self.gains_net, self.component("gains"), flatten_configuration(self.convention, x, R))
        if self.convention.translational:
            return out.unflatten(-1, (6, self.convention.u_dim))
        return out

    def forces(self, x: torch.Tensor, R: torch.Tensor, u: torch.Tensor) -> DiscreteForces:
        check_control(self.convention, u)
        if self.gains_net is None:
            batch = torch.broadcast_shapes(x.shape[:-1], R.shape[:-2], u.shape[:-1])
            return DiscreteForces.zeros(batch, dtype=R.dtype)
        g = self.gains(x, R)
        if self.convention.translational:
            f = 0.5 * (g @ u[..., None]).squeeze(-1)
            fx, fR = f[..., :3], f[..., 3:]
            return DiscreteForces(fR_minus=fR, fR_plus=fR, fx_minus=fx, fx_plus=fx)
        fR = g * u
        zero = torch.zeros_like(fR)
        return DiscreteForces(fR_minus=fR, fR_plus=zero, fx_minus=zero, fx_plus=zero)
