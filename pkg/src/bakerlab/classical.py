"""Classical dissipative baker map and its strange attractor.

The map acts on the unit torus.  Each step doubles the position
coordinate and contracts the momentum coordinate by ``eps / 2``,
stacking the two halves of the square into horizontal bands:

    q' = 2q mod 1
    p' = eps * p / 2          if q < 1/2
    p' = (eps * p + 1) / 2    if q >= 1/2

For ``0 < eps < 1`` the dynamics is uniformly hyperbolic and dissipative;
almost every orbit converges to a strange attractor whose transverse
structure is a self-similar Cantor set.  Its box-counting dimension is
known in closed form::

    d = 1 + ln 2 / (ln 2 - ln eps)

At ``eps = 1`` the map is area preserving and there is no attractor.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

__all__ = [
    "PhasePoint",
    "AttractorSample",
    "BoxCountingEstimate",
    "DEFAULT_BOX_SCALES",
    "attractor_dimension",
    "baker_step",
    "iterate_to_attractor",
    "box_counting_dimension",
    "attractor_histogram",
]

#: Default box side lengths for the dimension estimator: 11 sizes spaced
#: geometrically over two and a half decades of scale, 2**-3 down to 2**-8.
#: The range stays coarse enough that a 1e5-point sample can still populate
#: the transverse Cantor structure at the finest level.
DEFAULT_BOX_SCALES = np.geomspace(2.0**-3, 2.0**-8, 11)

#: Number of random grid offsets averaged per scale.  Offset averaging
#: suppresses the log-periodic lacunarity oscillation of Cantor-like sets,
#: which otherwise biases a least-squares slope on a finite scale window.
DEFAULT_BOX_OFFSETS = 8


def _check_eps(eps: float, *, allow_unit: bool = False) -> float:
    eps = float(eps)
    upper_ok = (eps <= 1.0) if allow_unit else (eps < 1.0)
    if not (0.0 < eps and upper_ok and math.isfinite(eps)):
        hi = "1" if allow_unit else "1 (exclusive)"
        raise ValueError(
            f"contraction parameter must satisfy 0 < eps <= {hi}, got {eps!r}"
        )
    return eps


@dataclasses.dataclass(frozen=True)
class PhasePoint:
    """A point on the unit torus, coordinates reduced mod 1."""

    q: float
    p: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", float(self.q) % 1.0)
        object.__setattr__(self, "p", float(self.p) % 1.0)


@dataclasses.dataclass(frozen=True)
class AttractorSample:
    """Ensemble of late-time orbit points approximating the attractor.

    Attributes
    ----------
    points:
        Array of shape (n_seeds * keep, 2); columns are (q, p).
    epsilon, n_seeds, transient, keep, seed:
        Generation parameters, recorded for provenance.
    """

    points: np.ndarray
    epsilon: float
    n_seeds: int
    transient: int
    keep: int
    seed: int

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclasses.dataclass(frozen=True)
class BoxCountingEstimate:
    """Least-squares box-counting dimension fit.

    ``counts[i]`` is the mean number of occupied boxes of side
    ``scales[i]`` over the averaged grid offsets.  The dimension is the
    slope of log(count) against log(1/scale).
    """

    scales: np.ndarray
    counts: np.ndarray
    dimension: float
    intercept: float
    r_squared: float
    n_offsets: int


def attractor_dimension(eps: float) -> float:
    """Closed-form box-counting dimension ``1 + ln2 / (ln2 - ln eps)``.

    Valid for ``0 < eps < 1``; approaches 2 as ``eps -> 1`` (attractor
    fattens into the whole torus) and 1 as ``eps -> 0`` (a single line).
    """
    eps = _check_eps(eps)
    return 1.0 + math.log(2.0) / (math.log(2.0) - math.log(eps))


def _step_arrays(q: np.ndarray, p: np.ndarray, eps: float):
    """One map step applied to coordinate arrays (vectorized)."""
    left = q < 0.5
    q_next = np.where(left, 2.0 * q, 2.0 * q - 1.0)
    p_next = np.where(left, 0.5 * eps * p, 0.5 * (eps * p + 1.0))
    return q_next, p_next


def baker_step(point: PhasePoint, eps: float) -> PhasePoint:
    """Apply one iteration of the dissipative baker map to a single point."""
    eps = _check_eps(eps, allow_unit=True)
    q, p = _step_arrays(np.asarray(point.q), np.asarray(point.p), eps)
    return PhasePoint(float(q), float(p))


#: Amplitude of the mantissa-refresh noise in :func:`iterate_to_attractor`:
#: far below every observable scale (finest default box is 2^-8), far above
#: the one-bit-per-step entropy loss of the exact doubling map.
_REFRESH_NOISE = 2.0**-40


def iterate_to_attractor(
    eps: float,
    n_seeds: int = 10_000,
    transient: int = 50,
    keep: int = 10,
    seed: int = 0,
) -> AttractorSample:
    """Sample the strange attractor from an ensemble of random seeds.

    Starts ``n_seeds`` points uniformly at random on the torus, discards
    ``transient`` iterations so the ensemble settles onto the attractor
    (50 steps contract the transverse distance below 2^-50), then records
    the next ``keep`` iterations of every orbit.

    The exact doubling map is numerically degenerate over long orbits: it
    consumes one mantissa bit per step, so after ~53 iterations every
    double-precision orbit lands exactly on q = 0 and stays there.  The
    ensemble sampler therefore reinjects uniform noise of amplitude 2^-40
    into q at each step — below any scale this package measures, enough to
    keep orbits generic indefinitely.  (:func:`baker_step` stays exact.)

    Returns an :class:`AttractorSample` with ``n_seeds * keep`` points.
    Reproducible: ensemble and noise both come from
    ``numpy.random.default_rng(seed)``.

    ``eps = 1`` is accepted: the closed, area-preserving map has no
    attractor, and the sample simply fills the torus uniformly.
    """
    eps = _check_eps(eps, allow_unit=True)
    if n_seeds < 1 or keep < 1 or transient < 0:
        raise ValueError("need n_seeds >= 1, keep >= 1, transient >= 0")
    rng = np.random.default_rng(seed)
    q = rng.random(n_seeds)
    p = rng.random(n_seeds)

    def noisy_step(q, p):
        q, p = _step_arrays(q, p, eps)
        q = (q + _REFRESH_NOISE * rng.random(n_seeds)) % 1.0
        return q, p

    for _ in range(transient):
        q, p = noisy_step(q, p)
    out = np.empty((n_seeds * keep, 2))
    for t in range(keep):
        out[t * n_seeds : (t + 1) * n_seeds, 0] = q
        out[t * n_seeds : (t + 1) * n_seeds, 1] = p
        q, p = noisy_step(q, p)
    return AttractorSample(
        points=out,
        epsilon=eps,
        n_seeds=int(n_seeds),
        transient=int(transient),
        keep=int(keep),
        seed=int(seed),
    )


def _occupied_boxes(points: np.ndarray, scale: float, offset: np.ndarray) -> int:
    """Count occupied boxes of side ``scale`` on a torus-wrapped shifted grid."""
    n_per_side = int(round(1.0 / scale))
    shifted = (points + offset) % 1.0
    idx = np.minimum((shifted * n_per_side).astype(np.int64), n_per_side - 1)
    codes = idx[:, 0] * n_per_side + idx[:, 1]
    return int(np.unique(codes).size)


def box_counting_dimension(
    sample: AttractorSample | np.ndarray,
    scales: np.ndarray | None = None,
    n_offsets: int = DEFAULT_BOX_OFFSETS,
    offset_seed: int = 0,
) -> BoxCountingEstimate:
    """Estimate the box-counting dimension of a planar point set.

    For each box side in ``scales`` the points are binned on ``n_offsets``
    grids shifted by torus-wrapped random offsets (the first offset is
    always zero) and the occupied-box counts are averaged.  The dimension
    is the ordinary least-squares slope of ``log(count)`` against
    ``log(1/scale)``.

    Requirements: at least 3 scales (degenerate fits are rejected), scales
    spanning at least 1.5 decades, and at least 1e4 points — below that the
    finest default boxes outnumber the points and the slope saturates.
    """
    points = sample.points if isinstance(sample, AttractorSample) else np.asarray(sample)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError("expected an (n, 2) array of torus points")
    if points.shape[0] < 10_000:
        raise ValueError(
            f"box counting needs >= 10000 points for a stable slope, got {points.shape[0]}"
        )
    scales = DEFAULT_BOX_SCALES if scales is None else np.asarray(scales, dtype=float)
    if scales.size < 3:
        raise ValueError("degenerate fit: need at least 3 box scales")
    if np.any(scales <= 0.0) or np.any(scales > 0.5):
        raise ValueError("box scales must lie in (0, 0.5]")
    span = math.log10(scales.max() / scales.min())
    if span < 1.5:
        raise ValueError(
            f"box scales must span >= 1.5 decades for a trustworthy slope, got {span:.2f}"
        )
    if n_offsets < 1:
        raise ValueError("need n_offsets >= 1")

    rng = np.random.default_rng(offset_seed)
    offsets = rng.random((n_offsets, 2))
    offsets[0] = 0.0

    order = np.argsort(scales)[::-1]  # largest box first
    scales = scales[order]
    counts = np.empty(scales.size)
    for i, s in enumerate(scales):
        counts[i] = np.mean([_occupied_boxes(points, s, off) for off in offsets])

    x = np.log(1.0 / scales)
    y = np.log(counts)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    return BoxCountingEstimate(
        scales=scales,
        counts=counts,
        dimension=float(slope),
        intercept=float(intercept),
        r_squared=r2,
        n_offsets=int(n_offsets),
    )


def attractor_histogram(
    sample: AttractorSample | np.ndarray, grid: int = 512
) -> np.ndarray:
    """Occupation histogram of a point sample on a ``grid x grid`` mesh.

    Returns an array indexed ``[p_cell, q_cell]`` (row = momentum band),
    suitable for image export.
    """
    points = sample.points if isinstance(sample, AttractorSample) else np.asarray(sample)
    if grid < 2:
        raise ValueError("grid must be >= 2")
    hist, _, _ = np.histogram2d(
        points[:, 1], points[:, 0], bins=grid, range=[[0.0, 1.0], [0.0, 1.0]]
    )
    return hist
