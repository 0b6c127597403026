"""Torus coherent states, Husimi fields, and spectral phase-space weights.

A coherent state on the ``n``-state torus is a minimum-uncertainty
Gaussian wave packet (widths ``sigma_q = sigma_p = sqrt(hbar/2)`` with
``hbar = 1/(2 pi n)``) made periodic by summing lattice images with
alternating signs, which matches the antiperiodic boundary conditions of
the quantized map.  In the momentum basis used throughout this package
the packet centered at ``(q, p)`` has components

    psi_j  ~  sum_m (-1)^m exp(-pi n (x_j - p + m)^2)
                       exp(-2 i pi n q (x_j - p + m)),      x_j = (j + 1/2)/n

with the image sum truncated at ``|m| <= 3`` (further images are below
double precision).  The Husimi field of an operator ``X`` is the diagonal
expectation ``H(q, p) = <z(q,p)| X |z(q,p)>``, evaluated on a regular grid
of cell-centered points; for a state it reduces to ``|<z|psi>|^2``.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .quantum import effective_hbar, _check_dim
from .spectral import EigenPair, decay_rate

__all__ = [
    "TorusCoherentState",
    "HusimiGrid",
    "OverlapRecord",
    "coherent_state",
    "coherent_overlap",
    "husimi_of_state",
    "husimi_of_operator",
    "overlap_with_invariant",
    "long_lived_projector_density",
    "attractor_mask",
    "husimi_mass_ratio",
]

_N_IMAGES = 3  # lattice images summed on each side; e^{-pi n m^2} underflows beyond

#: Biorthogonal pairs whose left/right trace overlap has modulus below
#: this cannot be weighted reliably in the spectral sum and are an error.
_DENOMINATOR_FLOOR = 1e-10


@dataclasses.dataclass(frozen=True)
class TorusCoherentState:
    """Normalized Gaussian wave packet centered at ``(q, p)`` on the torus."""

    n: int
    q: float
    p: float
    amplitudes: np.ndarray


def _packet_components(n: int, q: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Unnormalized packet components; broadcasts over grid axes of q, p.

    Returns an array of shape ``(n,) + broadcast(q, p).shape``.
    """
    x = (np.arange(n) + 0.5) / n  # basis-state centers
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    shape = (n,) + np.broadcast(q, p).shape
    out = np.zeros(shape, dtype=complex)
    xg = x.reshape((n,) + (1,) * (out.ndim - 1))
    for m in range(-_N_IMAGES, _N_IMAGES + 1):
        # the image displaced by m never gets closer to the center than
        # |m| - 1, so its Gaussian weight is bounded by exp(-pi n (|m|-1)^2);
        # skip images that cannot contribute above double-precision noise
        if abs(m) >= 2 and math.exp(-math.pi * n * (abs(m) - 1) ** 2) < 1e-25:
            continue
        dx = xg - p + m
        out += (-1.0) ** m * np.exp(
            (-math.pi * n) * dx * dx - (2j * math.pi * n) * q * dx
        )
    return out


def coherent_state(n: int, q: float, p: float) -> TorusCoherentState:
    """Coherent state at center ``(q, p)``, reduced mod 1, unit norm."""
    n = _check_dim(n)
    q = float(q) % 1.0
    p = float(p) % 1.0
    amp = _packet_components(n, np.asarray(q), np.asarray(p)).reshape(-1)
    nrm = np.linalg.norm(amp)
    if nrm == 0.0:
        raise ValueError("coherent state collapsed to zero (invalid parameters)")
    return TorusCoherentState(n=n, q=q, p=p, amplitudes=amp / nrm)


def coherent_overlap(a: TorusCoherentState, b: TorusCoherentState) -> complex:
    """Inner product ``<a|b>`` of two coherent states of equal dimension."""
    if a.n != b.n:
        raise ValueError("coherent states live in different dimensions")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


@dataclasses.dataclass(frozen=True)
class HusimiGrid:
    """Husimi field sampled on a cell-centered ``resolution^2`` grid.

    ``values[i, j]`` is the field at ``q = (j + 1/2)/R``, ``p = (i + 1/2)/R``
    (row index is momentum, so the array is image-like with p increasing
    downward; writers flip rows for display).  ``values`` is complex for
    operator fields, real non-negative for state fields.
    """

    n: int
    resolution: int
    values: np.ndarray
    kind: str

    @property
    def q_centers(self) -> np.ndarray:
        return (np.arange(self.resolution) + 0.5) / self.resolution

    @property
    def p_centers(self) -> np.ndarray:
        return (np.arange(self.resolution) + 0.5) / self.resolution

    def mass(self) -> float:
        """Grid-cell quadrature of ``|values|`` over the torus."""
        return float(np.sum(np.abs(self.values))) / self.resolution**2


# one-slot cache: the coherent frame is expensive (seconds) and large
# (n * R^2 complex), so keep only the most recently used one
_frame_cache: dict[tuple[int, int], np.ndarray] = {}


def _coherent_frame(n: int, resolution: int) -> np.ndarray:
    """Matrix of normalized coherent states on the grid, shape ``(n, R^2)``.

    Column ``i * R + j`` is the state centered at ``q = (j+1/2)/R``,
    ``p = (i+1/2)/R`` — consistent with :class:`HusimiGrid` row/column
    order after a ``reshape(R, R)`` of per-column results.
    """
    key = (n, resolution)
    if key in _frame_cache:
        return _frame_cache[key]
    r = resolution
    centers = (np.arange(r) + 0.5) / r
    qg = centers[None, :]  # varies along columns (axis 2 of the (n, R, R) block)
    pg = centers[:, None]  # varies along rows  (axis 1)
    block = _packet_components(n, qg, pg)  # (n, R, R)
    z = block.reshape(n, r * r)
    z /= np.linalg.norm(z, axis=0, keepdims=True)
    _frame_cache.clear()
    _frame_cache[key] = z
    return z


def husimi_of_state(state: TorusCoherentState | np.ndarray, resolution: int = 256) -> HusimiGrid:
    """Husimi field ``|<z|psi>|^2`` of a pure state (real, non-negative)."""
    amp = state.amplitudes if isinstance(state, TorusCoherentState) else np.asarray(state)
    n = amp.size
    _check_resolution(resolution)
    z = _coherent_frame(n, resolution)
    proj = z.conj().T @ amp
    vals = (proj.real**2 + proj.imag**2).reshape(resolution, resolution)
    return HusimiGrid(n=n, resolution=resolution, values=vals, kind="state")


def husimi_of_operator(
    op: np.ndarray, resolution: int = 256, chunk: int = 8192
) -> HusimiGrid:
    """Husimi field ``<z| X |z>`` of an operator (complex in general).

    Evaluated in grid chunks of ``chunk`` columns to bound the memory of
    the intermediate ``X Z`` product.
    """
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError(f"operator must be square, got {op.shape}")
    n = op.shape[0]
    _check_resolution(resolution)
    z = _coherent_frame(n, resolution)
    m = resolution * resolution
    vals = np.empty(m, dtype=complex)
    for start in range(0, m, chunk):
        zc = z[:, start : start + chunk]
        vals[start : start + chunk] = np.einsum("jc,jc->c", zc.conj(), op @ zc)
    return HusimiGrid(
        n=n,
        resolution=resolution,
        values=vals.reshape(resolution, resolution),
        kind="operator",
    )


def _check_resolution(resolution: int) -> None:
    if not 8 <= resolution <= 4096:
        raise ValueError(f"grid resolution must lie in [8, 4096], got {resolution}")


@dataclasses.dataclass(frozen=True)
class OverlapRecord:
    """Decay rate of a mode and its overlap with the invariant state."""

    gamma: float
    overlap: float


def overlap_with_invariant(pair: EigenPair, invariant: EigenPair | np.ndarray) -> OverlapRecord:
    """Hilbert-Schmidt overlap ``|Tr(psi^dag rho_inv)|`` of a right eigenmode
    with the invariant state, both normalized to unit Hilbert-Schmidt norm."""
    inv = invariant.right if isinstance(invariant, EigenPair) else np.asarray(invariant)
    a = pair.right
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(inv))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cannot form overlap with a zero operator")
    ov = abs(complex(np.vdot(a, inv))) / (na * nb)
    return OverlapRecord(gamma=pair.gamma, overlap=ov)


def long_lived_projector_density(
    pairs: list[EigenPair],
    lambda_cut: float,
    resolution: int = 256,
) -> HusimiGrid:
    """Husimi-weighted spectral sum over modes with ``|lambda| >= lambda_cut``.

    For each retained biorthogonal pair the summand is

        <z|psi_R|z> * conj(<z|psi_L|z>) / Tr(psi_L^dag psi_R)

    which makes the sum over the complete spectrum reproduce the flat
    field 1 (the biorthogonal resolution of identity applied to coherent
    projectors).  Truncated at ``lambda_cut`` it shows where in phase
    space the long-lived modes concentrate.  Requires left eigenoperators;
    a pair with vanishing trace overlap is an error.
    """
    if not pairs:
        raise ValueError("no eigenpairs supplied")
    selected = [p for p in pairs if abs(p.eigenvalue) >= lambda_cut]
    if not selected:
        raise ValueError(
            f"no eigenvalues with modulus >= {lambda_cut!r}; largest is "
            f"{max(abs(p.eigenvalue) for p in pairs)!r}"
        )
    n = selected[0].right.shape[0]
    _check_resolution(resolution)
    acc = np.zeros((resolution, resolution), dtype=complex)
    for p in selected:
        if p.left is None:
            raise ValueError(
                "projector density needs left eigenoperators; recompute the "
                "spectrum with left vectors enabled"
            )
        denom = complex(np.vdot(p.left, p.right))
        if abs(denom) < _DENOMINATOR_FLOOR:
            raise ValueError(
                f"left/right overlap vanished ({abs(denom):.2e}) for eigenvalue "
                f"{p.eigenvalue!r}; biorthogonal weight undefined"
            )
        h_right = husimi_of_operator(p.right, resolution).values
        h_left = husimi_of_operator(p.left, resolution).values
        acc += h_right * np.conj(h_left) / denom
    return HusimiGrid(n=n, resolution=resolution, values=acc, kind="projector_density")


def attractor_mask(points: np.ndarray, boxes: int = 32) -> np.ndarray:
    """Boolean occupancy mask of a classical point sample on a coarse grid.

    Returns ``mask[p_box, q_box]`` — True where at least one sample point
    falls, indexed like :class:`HusimiGrid` values.
    """
    points = np.asarray(points)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError("expected an (n, 2) array of torus points")
    if boxes < 2:
        raise ValueError("need at least a 2 x 2 mask")
    iq = np.minimum((points[:, 0] % 1.0 * boxes).astype(int), boxes - 1)
    ip = np.minimum((points[:, 1] % 1.0 * boxes).astype(int), boxes - 1)
    mask = np.zeros((boxes, boxes), dtype=bool)
    mask[ip, iq] = True
    return mask


def husimi_mass_ratio(grid: HusimiGrid, mask: np.ndarray) -> float:
    """Mean Husimi mass per cell inside a mask over mean mass outside.

    The grid is coarse-grained onto the mask's boxes (resolution must be a
    multiple of the mask size).  Infinite when the outside is empty.
    """
    boxes = mask.shape[0]
    if mask.shape != (boxes, boxes):
        raise ValueError("mask must be square")
    r = grid.resolution
    if r % boxes:
        raise ValueError(f"grid resolution {r} is not a multiple of mask size {boxes}")
    f = r // boxes
    coarse = np.abs(grid.values).reshape(boxes, f, boxes, f).sum(axis=(1, 3))
    inside = coarse[mask]
    outside = coarse[~mask]
    if inside.size == 0:
        raise ValueError("mask selects no boxes")
    mean_in = float(inside.mean())
    if outside.size == 0 or outside.sum() == 0.0:
        return math.inf
    return mean_in / float(outside.mean())
