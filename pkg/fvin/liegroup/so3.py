"""SO(3) primitives on batched float64 tensors.

Vectors have shape ``(..., 3)`` and matrices ``(..., 3, 3)``; every function
broadcasts over leading dimensions and is differentiable by torch autograd
(``log_so3`` away from the rotation angle pi).
"""
from __future__ import annotations

import math

import torch

from fvin.common.errors import NonSkewInput, NotARotation

ROTATION_TOL = 1e-9
SKEW_TOL = 1e-8

_SMALL_ANGLE = 1e-4
_PI_BRANCH = 1e-3
_TINY = 1e-300


def eye3(like: torch.Tensor) -> torch.Tensor:
    return torch.eye(3, dtype=like.dtype, device=like.device)


def hat(v: torch.Tensor) -> torch.Tensor:
    """Skew-symmetric matrix S(v) with S(v) w = v x w."""
    x, y, z = v.unbind(-1)
    zero = torch.zeros_like(x)
    return torch.stack(
        (
            torch.stack((zero, -z, y), dim=-1),
            torch.stack((z, zero, -x), dim=-1),
            torch.stack((-y, x, zero), dim=-1),
        ),
        dim=-2,
    )


def vee(M: torch.Tensor, *, tol: float = SKEW_TOL) -> torch.Tensor:
    """Inverse of :func:`hat`. Rejects matrices whose symmetric defect exceeds ``tol``."""
    if M.shape[-2:] != (3, 3):
        raise NonSkewInput(f"expected (..., 3, 3) matrices, got {tuple(M.shape)}")
    defect = torch.linalg.matrix_norm((M + M.transpose(-1, -2)).detach())
    if defect.numel() and float(defect.max()) > tol:
        raise NonSkewInput(f"matrix is not skew-symmetric: |M + M^T|_F = {float(defect.max()):.3e}")
    return 0.5 * torch.stack(
        (
            M[..., 2, 1] - M[..., 1, 2],
            M[..., 0, 2] - M[..., 2, 0],
            M[..., 1, 0] - M[..., 0, 1],
        ),
        dim=-1,
    )


def cayley(z: torch.Tensor) -> torch.Tensor:
    """Cay(z) = (I + S(z))(I - S(z))^-1 in closed form."""
    n2 = (z * z).sum(-1)[..., None, None]
    outer = z[..., :, None] * z[..., None, :]
    return ((1.0 - n2) * eye3(z) + 2.0 * hat(z) + 2.0 * outer) / (1.0 + n2)


def cayley_via_inverse(z: torch.Tensor) -> torch.Tensor:
    """Cay(z) evaluated literally as (I + S(z))(I - S(z))^-1."""
    S = hat(z)
    eye = eye3(z)
    # I + S and I - S commute
    return torch.linalg.solve(eye - S, eye + S)


def exp_so3(w: torch.Tensor) -> torch.Tensor:
    """Rodrigues formula."""
    theta2 = (w * w).sum(-1)
    small = theta2 < _SMALL_ANGLE**2
    theta = torch.sqrt(torch.where(small, torch.ones_like(theta2), theta2))
    a = torch.where(small, 1.0 - theta2 / 6.0 + theta2**2 / 120.0, torch.sin(theta) / theta)
    b = torch.where(small, 0.5 - theta2 / 24.0 + theta2**2 / 720.0, (1.0 - torch.cos(theta)) / (theta * theta))
    S = hat(w)
    return eye3(w) + a[..., None, None] * S + b[..., None, None] * (S @ S)


def rotation_angle(R: torch.Tensor) -> torch.Tensor:
    tr = R.diagonal(dim1=-2, dim2=-1).sum(-1)
    c = ((tr - 1.0) / 2.0).clamp(-1.0, 1.0)
    w = _axial(R)
    return torch.atan2(torch.sqrt((w * w).sum(-1) + _TINY), c)


def log_so3(R: torch.Tensor) -> torch.Tensor:
    """Rotation vector of R with norm in [0, pi].

    Near the identity theta/sin(theta) is replaced by its second-order Taylor
    expansion. Near pi the axis comes from the dominant column of the symmetric
    part, signed to agree with the antisymmetric part, or with its first
    nonzero component positive when that part vanishes.
    """
    tr = R.diagonal(dim1=-2, dim2=-1).sum(-1)
    c = ((tr - 1.0) / 2.0).clamp(-1.0, 1.0)
    w = _axial(R)
    s = torch.sqrt((w * w).sum(-1) + _TINY)
    theta = torch.atan2(s, c)

    small = theta < _SMALL_ANGLE
    safe_s = torch.where(small, torch.ones_like(s), s)
    factor = torch.where(small, 1.0 + theta * theta / 6.0, theta / safe_s)
    out = factor[..., None] * w

    near_pi = theta > math.pi - _PI_BRANCH
    if bool(near_pi.any()):
        out = torch.where(near_pi[..., None], _log_near_pi(R, c, w, s, theta), out)
    return out


def orthogonality_error(R: torch.Tensor) -> torch.Tensor:
    """Frobenius norm of R^T R - I."""
    return torch.linalg.matrix_norm(R.transpose(-1, -2) @ R - eye3(R))


def check_rotation(R: torch.Tensor, *, tol: float = ROTATION_TOL) -> torch.Tensor:
    """Return ``R`` unchanged if every matrix in the batch is a rotation within ``tol``."""
    if R.shape[-2:] != (3, 3):
        raise NotARotation(f"expected (..., 3, 3) matrices, got {tuple(R.shape)}")
    Rd = R.detach()
    if not bool(torch.isfinite(Rd).all()):
        raise NotARotation("rotation has non-finite entries")
    if Rd.numel() == 0:
        return R
    orth = float(orthogonality_error(Rd).max())
    if orth > tol:
        raise NotARotation(f"|R^T R - I|_F = {orth:.3e} exceeds {tol:.0e}")
    det = float((torch.linalg.det(Rd) - 1.0).abs().max())
    if det > tol:
        raise NotARotation(f"|det(R) - 1| = {det:.3e} exceeds {tol:.0e}")
    return R


def project_to_so3(M: torch.Tensor) -> torch.Tensor:
    """Nearest rotation in the Frobenius sense (SVD with determinant correction)."""
    U, _, Vh = torch.linalg.svd(M)
    d = torch.sign(torch.linalg.det(U @ Vh))
    D = torch.diag_embed(torch.stack((torch.ones_like(d), torch.ones_like(d), d), dim=-1))
    return U @ D @ Vh


def _axial(R: torch.Tensor) -> torch.Tensor:
    # sin(theta) * axis
    return 0.5 * torch.stack(
        (
            R[..., 2, 1] - R[..., 1, 2],
            R[..., 0, 2] - R[..., 2, 0],
            R[..., 1, 0] - R[..., 0, 1],
        ),
        dim=-1,
    )


def _log_near_pi(
    R: torch.Tensor,
    c: torch.Tensor,
    w: torch.Tensor,
    s: torch.Tensor,
    theta: torch.Tensor,
) -> torch.Tensor:
    sym = 0.5 * (R + R.transpose(-1, -2))
    denom = (1.0 - c).clamp_min(1.0)[..., None, None]
    outer = (sym - c[..., None, None] * eye3(R)) / denom  # axis axis^T
    diag = outer.diagonal(dim1=-2, dim2=-1)
    idx = diag.argmax(-1)
    col = torch.take_along_dim(outer, idx[..., None, None].expand(*idx.shape, 3, 1), dim=-1).squeeze(-1)
    pivot = torch.take_along_dim(diag, idx[..., None], dim=-1).squeeze(-1)
    axis = col / torch.sqrt(pivot.clamp_min(_TINY))[..., None]
    axis = axis / torch.sqrt((axis * axis).sum(-1, keepdim=True) + _TINY)

    nonzero = axis.abs() > 1e-12
    first = nonzero.to(torch.int64).argmax(-1)
    lead = torch.take_along_dim(axis, first[..., None], dim=-1).squeeze(-1)
    conventional = torch.where(lead < 0, -torch.ones_like(lead), torch.ones_like(lead))
    agreement = (axis * w).sum(-1)
    from_w = torch.where(agreement < 0, -torch.ones_like(agreement), torch.ones_like(agreement))
    sign = torch.where(s > 1e-9, from_w, conventional)
    return (sign * theta)[..., None] * axis
