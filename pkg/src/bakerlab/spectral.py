"""Resonance spectra, decay rates, and the fractal Weyl scaling fit.

The eigenvalues of the one-step superoperator live in the closed unit
disk.  For the trace-preserving kinds exactly one eigenvalue sits at 1
(the invariant state); every other mode decays as ``|lambda|^t``, i.e. at
rate ``gamma = -2 ln |lambda|`` per step in probability.  The number of
long-lived modes (``gamma`` below a cutoff) grows as a power of the
Liouville dimension ``n^2``; the exponent of that power law is the
quantity of interest here, extracted by :func:`weyl_scaling_fit` and
contrasted with the naive attractor-dimension prediction by
:func:`weyl_law_comparison`.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import scipy.linalg
import scipy.sparse.linalg
from scipy.optimize import linear_sum_assignment

from .classical import attractor_dimension
from .quantum import Superoperator, unvec, vec

__all__ = [
    "GAMMA_MAX",
    "MODULUS_FLOOR",
    "ResonanceSpectrum",
    "EigenPair",
    "DensityHistogram",
    "LongLivedCount",
    "WeylScalingFit",
    "WeylComparison",
    "decay_rate",
    "decay_rates",
    "spectrum_order",
    "match_spectra",
    "full_spectrum",
    "leading_eigenpairs",
    "density_of_states",
    "count_long_lived",
    "weyl_scaling_fit",
    "weyl_law_comparison",
]

#: Cap for decay rates: moduli at or below MODULUS_FLOOR are numerically
#: indistinguishable from zero, and -2*ln(1e-15) ~ 69, so every reported
#: rate lies in [0, GAMMA_MAX].  Keeps histograms free of infinities.
GAMMA_MAX = 69.0
MODULUS_FLOOR = 1e-15

#: Moduli may exceed 1 by at most this much before decay_rate refuses;
#: anything larger signals a broken superoperator, not round-off.
_RADIUS_SLACK = 1e-8


def decay_rate(eigenvalue: complex) -> float:
    """Decay rate ``gamma = -2 ln |lambda|`` of one resonance.

    Rates are capped at :data:`GAMMA_MAX` (moduli below 1e-15), and tiny
    negative values from moduli a rounding error above 1 are clamped to 0.
    Moduli beyond ``1 + 1e-8`` are rejected.
    """
    mod = abs(eigenvalue)
    if mod > 1.0 + _RADIUS_SLACK:
        raise ValueError(
            f"eigenvalue modulus {mod!r} exceeds the unit disk beyond tolerance"
        )
    if mod <= MODULUS_FLOOR:
        return GAMMA_MAX
    return max(0.0, min(GAMMA_MAX, -2.0 * math.log(mod)))


def decay_rates(eigenvalues: np.ndarray) -> np.ndarray:
    """Vectorized :func:`decay_rate`."""
    mods = np.abs(np.asarray(eigenvalues))
    if mods.size and float(mods.max()) > 1.0 + _RADIUS_SLACK:
        raise ValueError(
            f"eigenvalue modulus {mods.max()!r} exceeds the unit disk beyond tolerance"
        )
    with np.errstate(divide="ignore"):
        g = -2.0 * np.log(mods)
    g[mods <= MODULUS_FLOOR] = GAMMA_MAX
    return np.clip(g, 0.0, GAMMA_MAX)


def spectrum_order(eigenvalues: np.ndarray) -> np.ndarray:
    """Canonical ordering: descending modulus, ties broken by ascending phase."""
    w = np.asarray(eigenvalues)
    return np.lexsort((np.angle(w), -np.abs(w)))


def match_spectra(a: np.ndarray, b: np.ndarray) -> float:
    """Greatest pointwise distance between two spectra as multisets.

    Uses optimal assignment in the complex plane, which is stable where a
    plain sort is not (eigenvalues with nearly equal moduli can swap sort
    positions between two otherwise identical computations).
    """
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.size != b.size:
        raise ValueError(f"spectra differ in size: {a.size} vs {b.size}")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max()) if a.size else 0.0


@dataclasses.dataclass(frozen=True)
class ResonanceSpectrum:
    """Eigenvalues of one superoperator, canonically ordered.

    ``eigenvalues`` is sorted by :func:`spectrum_order`; ``complete`` is
    True when all ``n^2`` eigenvalues are present (dense solve) and False
    for a leading partial set from the iterative solver.
    """

    n: int
    kind: str
    epsilon: float | None
    eigenvalues: np.ndarray
    complete: bool

    @classmethod
    def from_eigenvalues(
        cls,
        eigenvalues: np.ndarray,
        n: int,
        kind: str,
        epsilon: float | None,
    ) -> "ResonanceSpectrum":
        w = np.asarray(eigenvalues, dtype=complex).ravel()
        w = w[spectrum_order(w)]
        return cls(
            n=int(n),
            kind=kind,
            epsilon=epsilon,
            eigenvalues=w,
            complete=w.size == int(n) ** 2,
        )

    def __len__(self) -> int:
        return self.eigenvalues.size

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.eigenvalues)

    @property
    def gammas(self) -> np.ndarray:
        return decay_rates(self.eigenvalues)


@dataclasses.dataclass
class EigenPair:
    """One resonance with its right (and optionally left) eigenoperator.

    ``right`` has unit Hilbert-Schmidt norm.  When ``left`` is present and
    ``normalized`` is True, it is scaled so ``Tr(left^dag right) = 1``
    (the biorthonormal convention); ``normalized`` False flags a pair whose
    left/right overlap was too small to normalize reliably.
    """

    eigenvalue: complex
    right: np.ndarray
    left: np.ndarray | None = None
    normalized: bool = False
    residual: float = float("nan")

    @property
    def gamma(self) -> float:
        return decay_rate(self.eigenvalue)


#: Left/right overlaps below this are treated as numerically defective
#: (near-degenerate Jordan-like pairs) and are left unnormalized.
_PAIR_OVERLAP_FLOOR = 1e-10


def _biorthonormalize(
    w: np.ndarray, vr: np.ndarray, vl: np.ndarray | None, n: int
) -> list[EigenPair]:
    pairs: list[EigenPair] = []
    for i in range(w.size):
        right = unvec(vr[:, i], n)
        nrm = float(np.linalg.norm(vr[:, i]))
        if nrm > 0:
            right = right / nrm
        left = None
        normalized = False
        if vl is not None:
            left = unvec(vl[:, i], n)
            t = complex(np.vdot(vl[:, i], vr[:, i])) / nrm if nrm > 0 else 0.0
            if abs(t) >= _PAIR_OVERLAP_FLOOR:
                left = left / np.conj(t)
                normalized = True
        pairs.append(
            EigenPair(eigenvalue=complex(w[i]), right=right, left=left, normalized=normalized)
        )
    return pairs


def full_spectrum(
    superop: Superoperator,
    want_vectors: bool | str = False,
    method: str = "auto",
    force_materialize: bool = False,
):
    """Complete spectrum of a superoperator by a dense eigensolver.

    Parameters
    ----------
    superop:
        The map to diagonalize.
    want_vectors:
        ``True`` (or ``"both"``) also returns left and right eigenoperators
        as a list of :class:`EigenPair` (biorthonormalized where possible);
        ``"right"`` returns right eigenoperators only, at about half the
        solver cost.  Either way the return value becomes the tuple
        ``(spectrum, pairs)``.
    method:
        ``"dense"`` diagonalizes the complex matrix; ``"dense-real"``
        diagonalizes the real Hermitian-basis matrix (same spectrum, about
        half the memory and markedly faster, but no eigenvectors).
        ``"auto"`` picks ``"dense"`` when vectors are requested and
        ``"dense-real"`` otherwise.
    force_materialize:
        Forwarded to the dense-matrix size guard.
    """
    if method not in ("auto", "dense", "dense-real"):
        raise ValueError(f"unknown method {method!r}")
    if want_vectors not in (False, True, "both", "right"):
        raise ValueError(f"want_vectors must be False, True, 'both', or 'right', got {want_vectors!r}")
    if method == "auto":
        method = "dense" if want_vectors else "dense-real"
    if want_vectors and method == "dense-real":
        raise ValueError("the real-basis route computes eigenvalues only")

    n = superop.n
    if method == "dense-real":
        mat = superop.hermitian_basis_matrix(force=force_materialize)
        w = scipy.linalg.eigvals(mat, overwrite_a=True, check_finite=False)
        del mat
        spectrum = ResonanceSpectrum.from_eigenvalues(w, n, superop.kind, superop.epsilon)
        return spectrum

    mat = superop.matrix(force=force_materialize)
    if want_vectors:
        both = want_vectors in (True, "both")
        if both:
            w, vl, vr = scipy.linalg.eig(mat, left=True, right=True)
        else:
            w, vr = scipy.linalg.eig(mat, left=False, right=True)
            vl = None
        order = spectrum_order(w)
        w = w[order]
        vr = vr[:, order]
        if vl is not None:
            vl = vl[:, order]
        pairs = _biorthonormalize(w, vr, vl, n)
        spectrum = ResonanceSpectrum.from_eigenvalues(w, n, superop.kind, superop.epsilon)
        return spectrum, pairs
    w = scipy.linalg.eigvals(mat, check_finite=False)
    return ResonanceSpectrum.from_eigenvalues(w, n, superop.kind, superop.epsilon)


def leading_eigenpairs(
    superop: Superoperator,
    k: int = 2,
    want_left: bool = False,
    tol: float = 0.0,
    seed: int = 7,
    maxiter: int | None = None,
) -> list[EigenPair]:
    """Largest-modulus eigenpairs through the matrix-free Arnoldi solver.

    Never materializes the superoperator: each Arnoldi step applies the
    map in its structured O(n^3) form, so this scales to dimensions far
    beyond the dense route.  The start vector is drawn from a fixed seed;
    results are deterministic for fixed arguments.

    When ``want_left`` is True a second Arnoldi run on the adjoint supplies
    left eigenoperators, paired to the right ones by matching conjugated
    eigenvalues within 1e-6 (optimal assignment; an ambiguous pairing
    raises).  Each returned pair records its right-residual
    ``||S v - lambda v||_2``.
    """
    m = superop.n * superop.n
    if not 1 <= k <= m - 2:
        raise ValueError(f"need 1 <= k <= n^2 - 2 = {m - 2}, got k = {k}")
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(m) + 1j * rng.standard_normal(m)

    op = superop.as_linear_operator()
    w, vr = scipy.sparse.linalg.eigs(op, k=k, which="LM", v0=v0, tol=tol, maxiter=maxiter)
    order = spectrum_order(w)
    w = w[order]
    vr = vr[:, order]

    vl = None
    if want_left:
        adj = superop.as_linear_operator(adjoint=True)
        wl, ul = scipy.sparse.linalg.eigs(
            adj, k=k, which="LM", v0=v0, tol=tol, maxiter=maxiter
        )
        # adjoint eigenvalues are conjugates of the forward ones; match them
        cost = np.abs(np.conj(wl)[None, :] - w[:, None])
        rows, cols = linear_sum_assignment(cost)
        worst = float(cost[rows, cols].max())
        if worst > 1e-6:
            raise RuntimeError(
                f"left/right eigenvalue pairing ambiguous (gap {worst:.2e} > 1e-6); "
                "increase k or tighten tol"
            )
        vl = np.empty_like(vr)
        for r, c in zip(rows, cols):
            vl[:, r] = ul[:, c]

    pairs = _biorthonormalize(w, vr, vl, superop.n)
    for pair in pairs:
        rv = vec(pair.right)
        pair.residual = float(
            np.linalg.norm(superop.matvec(rv) - pair.eigenvalue * rv)
        )
    return pairs


@dataclasses.dataclass(frozen=True)
class DensityHistogram:
    """Normalized density of decay rates over a window.

    ``density[i]`` is per unit gamma; the densities integrate to 1 over
    the window (``sum(density * diff(bin_edges)) == 1``).
    """

    bin_edges: np.ndarray
    density: np.ndarray
    window: tuple[float, float]
    n_inside: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])


def density_of_states(
    spectrum: ResonanceSpectrum | np.ndarray,
    n_bins: int = 64,
    window: tuple[float, float] = (0.0, 18.0),
) -> DensityHistogram:
    """Histogram of decay rates, normalized to unit mass over the window.

    Accepts a :class:`ResonanceSpectrum` or a raw array of decay rates.
    Requires at least 10 bins and at least one rate inside the window.
    """
    gammas = (
        spectrum.gammas if isinstance(spectrum, ResonanceSpectrum) else np.asarray(spectrum, float)
    )
    if gammas.size == 0:
        raise ValueError("empty spectrum")
    if n_bins < 10:
        raise ValueError(f"need at least 10 bins for a meaningful density, got {n_bins}")
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise ValueError(f"window must be increasing, got {window!r}")
    counts, edges = np.histogram(gammas, bins=n_bins, range=(lo, hi))
    inside = int(counts.sum())
    if inside == 0:
        raise ValueError(f"no decay rates inside window {window!r}")
    widths = np.diff(edges)
    density = counts / (inside * widths)
    return DensityHistogram(bin_edges=edges, density=density, window=(lo, hi), n_inside=inside)


@dataclasses.dataclass(frozen=True)
class LongLivedCount:
    """Number and fraction of resonances below a decay-rate cutoff."""

    n: int
    gamma_cut: float
    count: int
    fraction: float


def count_long_lived(spectrum: ResonanceSpectrum, gamma_cut: float) -> LongLivedCount:
    """Count resonances with ``gamma < gamma_cut``; fraction is of all ``n^2``.

    Requires a complete spectrum — counting on a truncated eigenvalue set
    would silently undercount.
    """
    if not spectrum.complete:
        raise ValueError(
            f"long-lived count needs the complete spectrum "
            f"({spectrum.n ** 2} eigenvalues), got {len(spectrum)}"
        )
    if gamma_cut <= 0:
        raise ValueError(f"gamma_cut must be positive, got {gamma_cut}")
    count = int(np.count_nonzero(spectrum.gammas < gamma_cut))
    return LongLivedCount(
        n=spectrum.n,
        gamma_cut=float(gamma_cut),
        count=count,
        fraction=count / spectrum.n**2,
    )


@dataclasses.dataclass(frozen=True)
class WeylScalingFit:
    """Power-law fit ``fraction ~ (n^2)^(-beta)`` of long-lived fractions.

    Ordinary least squares of ``ln(fraction)`` against ``ln(n^2)``;
    ``beta`` is minus the slope.
    """

    gamma_cut: float
    dims: np.ndarray  # Hilbert dimensions n
    fractions: np.ndarray
    beta: float
    intercept: float
    r_squared: float


def weyl_scaling_fit(
    dims: np.ndarray, fractions: np.ndarray, gamma_cut: float
) -> WeylScalingFit:
    """Fit the scaling exponent of long-lived fractions across dimensions.

    ``dims`` are Hilbert-space dimensions ``n`` (at least 4 distinct
    values); ``fractions`` the matching long-lived fractions, which must be
    positive (a zero count carries no slope information and is rejected).
    """
    dims = np.asarray(dims, dtype=int).ravel()
    fractions = np.asarray(fractions, dtype=float).ravel()
    if dims.size != fractions.size:
        raise ValueError("dims and fractions differ in length")
    if np.unique(dims).size < 4:
        raise ValueError("need at least 4 distinct dimensions for a scaling fit")
    if np.any(fractions <= 0.0):
        raise ValueError("fractions must be positive for a log-log fit")
    x = np.log(dims.astype(float) ** 2)
    y = np.log(fractions)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    return WeylScalingFit(
        gamma_cut=float(gamma_cut),
        dims=dims,
        fractions=fractions,
        beta=float(-slope),
        intercept=float(intercept),
        r_squared=r2,
    )


@dataclasses.dataclass(frozen=True)
class WeylComparison:
    """Fitted exponent versus the naive attractor-dimension prediction.

    ``naive_exponent`` is ``2 - d`` with ``d`` the classical attractor
    dimension: the value the exponent would take if long-lived resonances
    simply tiled the attractor.  ``gap`` is ``beta - naive_exponent``; the
    headline phenomenon is that the gap is large and positive.
    """

    epsilon: float
    gamma_cut: float
    beta: float
    attractor_dim: float
    naive_exponent: float
    gap: float


def weyl_law_comparison(fit: WeylScalingFit, eps: float) -> WeylComparison:
    """Compare a fitted scaling exponent against ``2 - d(eps)``."""
    d = attractor_dimension(eps)
    naive = 2.0 - d
    return WeylComparison(
        epsilon=float(eps),
        gamma_cut=fit.gamma_cut,
        beta=fit.beta,
        attractor_dim=d,
        naive_exponent=naive,
        gap=fit.beta - naive,
    )
