"""Quantized baker map with contractive momentum noise.

Conventions
-----------
All matrices act on an ``n``-dimensional Hilbert space in the *momentum*
basis; the effective Planck constant is ``hbar = 1 / (2 pi n)``.  The
unitary step is built from antiperiodic discrete Fourier matrices

    F[j, k] = exp(-2i pi (j + 1/2)(k + 1/2) / n) / sqrt(n)

(the half-integer shifts impose antiperiodic boundary conditions in both
position and momentum) as ``B = diag(F_{n/2}, F_{n/2}) . F_n^{-1}``, which
requires even ``n``.

Dissipation enters through a one-parameter Kraus family indexed by the
number ``mu`` of momentum quanta lost in one step:

    A[mu][i - mu, i] = sqrt( binom(i, mu) * eps**(i - mu) * (1 - eps)**mu )

Each ``A[mu]`` has a single nonzero diagonal, the family is trace
preserving (``sum A^dag A = 1``) and, for ``eps < 1``, non-unital: it
funnels probability toward the ground momentum state, the quantum analogue
of the classical contraction toward ``p = 0`` bands.

One time step of the open dynamics is the completely positive map

    rho  ->  B ( sum_mu A[mu] rho A[mu]^dag ) B^dag.

Vectorization is column stacking: ``vec(rho)[b * n + a] = rho[a, b]``
(NumPy order='F').  In that convention the matrix of ``rho -> X rho Y``
is ``kron(Y.T, X)``, so the one-step superoperator is
``sum_mu kron(conj(B A[mu]), B A[mu])`` — an ``n^2 x n^2`` matrix that is
only materialized on request, guarded above ``n = 100``.

Two additional map kinds share the interface: ``"noiseless"`` (the closed
unitary map, ``eps`` ignored) and ``"open"`` (a control model with escape
instead of contraction: the unitary step preceded by a projector that
deletes the middle third of the momentum basis, requiring ``n % 6 == 0``).
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np
from scipy.sparse.linalg import LinearOperator
from scipy.special import gammaln

__all__ = [
    "MaterializationGuard",
    "KrausSet",
    "Superoperator",
    "SUPEROP_KINDS",
    "MATERIALIZE_MAX_DIM",
    "effective_hbar",
    "build_antiperiodic_dft",
    "build_baker_unitary",
    "build_kraus",
    "apply_channel",
    "apply_channel_adjoint",
    "apply_noise",
    "apply_noise_adjoint",
    "opening_projector",
    "build_superoperator",
    "superop_matvec",
    "vec",
    "unvec",
    "hermitian_basis_matrix",
]

SUPEROP_KINDS = ("contractive", "noiseless", "open")

#: Dense materialization of the n^2 x n^2 superoperator is refused above
#: this dimension unless forced: at n = 100 the complex matrix is already
#: 1.6 GB, and every routine in this package has a matrix-free path.
MATERIALIZE_MAX_DIM = 100


class MaterializationGuard(RuntimeError):
    """Raised when a dense superoperator matrix would exceed the size guard."""


def effective_hbar(n: int) -> float:
    """Effective Planck constant ``1 / (2 pi n)`` on the n-state torus."""
    n = _check_dim(n)
    return 1.0 / (2.0 * math.pi * n)


def _check_dim(n: int, *, minimum: int = 2, even: bool = False, multiple_of: int = 1) -> int:
    n = int(n)
    if n < minimum:
        raise ValueError(f"Hilbert space dimension must be >= {minimum}, got {n}")
    if even and n % 2:
        raise ValueError(f"baker unitary needs an even dimension, got {n}")
    if multiple_of > 1 and n % multiple_of:
        raise ValueError(
            f"this map kind needs dimension divisible by {multiple_of}, got {n}"
        )
    return n


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not (0.0 < eps <= 1.0 and math.isfinite(eps)):
        raise ValueError(f"noise parameter must satisfy 0 < eps <= 1, got {eps!r}")
    return eps


def build_antiperiodic_dft(n: int) -> np.ndarray:
    """Antiperiodic discrete Fourier matrix of size ``n``.

    Unitary and symmetric (equal to its transpose); its inverse is its
    elementwise conjugate.  Well-defined for any ``n >= 1`` (the size-1
    matrix is the phase ``-i``), which the smallest baker unitary needs
    for its half-size blocks.
    """
    n = _check_dim(n, minimum=1)
    j = np.arange(n) + 0.5
    return np.exp(-2j * np.pi * np.outer(j, j) / n) / np.sqrt(n)


def build_baker_unitary(n: int) -> np.ndarray:
    """One-step unitary of the closed baker map in the momentum basis.

    Block-diagonal pair of half-size antiperiodic Fourier matrices composed
    with the inverse full-size one; mixes the two halves of the basis the
    way the classical map stretches and stacks the two halves of the torus.
    Requires even ``n``.
    """
    n = _check_dim(n, even=True)
    full = build_antiperiodic_dft(n)
    half = build_antiperiodic_dft(n // 2)
    blocks = np.zeros((n, n), dtype=complex)
    blocks[: n // 2, : n // 2] = half
    blocks[n // 2 :, n // 2 :] = half
    # full is unitary, so its inverse is the conjugate transpose
    return blocks @ full.conj().T


def _kraus_weights(n: int, eps: float) -> list[np.ndarray]:
    """Diagonal weights of each Kraus operator.

    ``weights[mu][k] = A[mu][k, k + mu]`` for ``k = 0 .. n-1-mu``: the
    amplitude for dropping from momentum state ``k + mu`` to ``k``.
    Computed through log-gamma so binomial factors stay finite for large
    ``n``; the band is truncated at machine precision, which keeps the
    operator count O(n * (1 - eps)) instead of n for weak noise.
    """
    if eps == 1.0:
        return [np.ones(n)]
    log_eps = math.log(eps)
    log_1me = math.log1p(-eps)
    weights: list[np.ndarray] = []
    for mu in range(n):
        i = np.arange(mu, n)  # source momentum index
        k = i - mu  # target momentum index
        log_w2 = (
            gammaln(i + 1.0)
            - gammaln(k + 1.0)
            - gammaln(mu + 1.0)
            + k * log_eps
            + mu * log_1me
        )
        w = np.exp(0.5 * log_w2)
        if mu > 0 and not np.any(w > 1e-300):
            break
        weights.append(w)
    return weights


@dataclasses.dataclass(frozen=True)
class KrausSet:
    """Contractive momentum-loss Kraus family for one noise strength.

    ``weights[mu]`` holds the single nonzero diagonal of the ``mu``-th
    operator (see :func:`build_kraus`).  Operators with all-zero weight
    are dropped, so ``n_ops <= n``.
    """

    n: int
    epsilon: float
    weights: tuple[np.ndarray, ...]

    @property
    def n_ops(self) -> int:
        return len(self.weights)

    def matrix(self, mu: int) -> np.ndarray:
        """Dense ``n x n`` matrix of the ``mu``-th Kraus operator."""
        if not 0 <= mu < self.n_ops:
            raise ValueError(f"Kraus index must lie in [0, {self.n_ops}), got {mu}")
        a = np.zeros((self.n, self.n))
        w = self.weights[mu]
        idx = np.arange(w.size)
        a[idx, idx + mu] = w
        return a

    def matrices(self) -> list[np.ndarray]:
        return [self.matrix(mu) for mu in range(self.n_ops)]

    def completeness_defect(self) -> float:
        """Max-norm of ``sum_mu A^dag A - 1`` (zero for a trace-preserving set)."""
        diag = np.zeros(self.n)
        for mu, w in enumerate(self.weights):
            diag[mu : mu + w.size] += w * w
        return float(np.max(np.abs(diag - 1.0)))

    def dual_defect(self) -> float:
        """Max-norm of ``sum_mu A A^dag - 1``: zero iff unital (eps = 1)."""
        diag = np.zeros(self.n)
        for w in self.weights:
            diag[: w.size] += w * w
        return float(np.max(np.abs(diag - 1.0)))


def build_kraus(n: int, eps: float) -> KrausSet:
    """Build the momentum-loss Kraus family at dimension ``n``, strength ``eps``.

    ``eps = 1`` gives the single identity operator (no noise); as
    ``eps -> 0`` every operator collapses toward ``|0><mu|`` (one-step reset
    to the ground momentum state).
    """
    n = _check_dim(n)
    eps = _check_eps(eps)
    return KrausSet(n=n, epsilon=eps, weights=tuple(_kraus_weights(n, eps)))


def apply_noise(rho: np.ndarray, kraus: KrausSet) -> np.ndarray:
    """Apply the noise stage ``rho -> sum_mu A[mu] rho A[mu]^dag``.

    Exploits the single-diagonal structure: each term is a rank-pattern
    shift of a trailing submatrix, so the whole sum costs O(n^3) with no
    dense Kraus matrices ever formed.
    """
    n = kraus.n
    if rho.shape != (n, n):
        raise ValueError(f"state must be {n} x {n}, got {rho.shape}")
    out = np.zeros((n, n), dtype=complex)
    for mu, w in enumerate(kraus.weights):
        m = w.size
        out[:m, :m] += (w[:, None] * w[None, :]) * rho[mu : mu + m, mu : mu + m]
    return out


def apply_noise_adjoint(x: np.ndarray, kraus: KrausSet) -> np.ndarray:
    """Apply the Heisenberg-picture noise stage ``x -> sum_mu A^dag x A``."""
    n = kraus.n
    if x.shape != (n, n):
        raise ValueError(f"observable must be {n} x {n}, got {x.shape}")
    out = np.zeros((n, n), dtype=complex)
    for mu, w in enumerate(kraus.weights):
        m = w.size
        out[mu : mu + m, mu : mu + m] += (w[:, None] * w[None, :]) * x[:m, :m]
    return out


def apply_channel(rho: np.ndarray, kraus: KrausSet, baker: np.ndarray) -> np.ndarray:
    """One full dissipative step: noise stage, then unitary stirring.

    Computes ``B (sum_mu A[mu] rho A[mu]^dag) B^dag`` without forming any
    dense Kraus matrix.
    """
    baker = np.asarray(baker)
    if baker.shape != (kraus.n, kraus.n):
        raise ValueError(f"unitary must be {kraus.n} x {kraus.n}, got {baker.shape}")
    return baker @ apply_noise(rho, kraus) @ baker.conj().T


def apply_channel_adjoint(x: np.ndarray, kraus: KrausSet, baker: np.ndarray) -> np.ndarray:
    """Heisenberg-picture full step (adjoint of :func:`apply_channel`)."""
    baker = np.asarray(baker)
    if baker.shape != (kraus.n, kraus.n):
        raise ValueError(f"unitary must be {kraus.n} x {kraus.n}, got {baker.shape}")
    return apply_noise_adjoint(baker.conj().T @ x @ baker, kraus)


def opening_projector(n: int) -> np.ndarray:
    """0/1 diagonal of the projector deleting the middle third of the basis.

    Zeroes indices ``n/3 .. 2n/3 - 1``; requires ``n`` divisible by 3.
    Used by the ``"open"`` map kind, where loss is by escape rather than
    contraction.
    """
    n = _check_dim(n, multiple_of=3)
    diag = np.ones(n)
    diag[n // 3 : 2 * n // 3] = 0.0
    return diag


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization: ``vec(rho)[b*n + a] = rho[a, b]``."""
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    if v.size != n * n:
        raise ValueError(f"vector of length {v.size} is not an {n} x {n} operator")
    return v.reshape((n, n), order="F")


@dataclasses.dataclass
class Superoperator:
    """One-step evolution superoperator of a chosen map kind.

    Applies as a structured map on ``n x n`` operators (:meth:`apply`,
    :meth:`apply_adjoint`), as a matrix-free action on length-``n^2``
    vectors (:meth:`matvec`), or — on explicit request and below the size
    guard — as a dense ``n^2 x n^2`` matrix (:meth:`matrix`).
    """

    n: int
    kind: str
    epsilon: float | None
    baker: np.ndarray
    kraus: KrausSet | None = None
    projector: np.ndarray | None = None
    _dense: np.ndarray | None = dataclasses.field(default=None, repr=False)

    def __repr__(self) -> str:
        eps = f", eps={self.epsilon:g}" if self.epsilon is not None else ""
        return f"Superoperator(n={self.n}, kind={self.kind!r}{eps})"

    # -- structured application ------------------------------------------------

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """One step in the Schroedinger picture: noise, then unitary stirring."""
        if rho.shape != (self.n, self.n):
            raise ValueError(f"state must be {self.n} x {self.n}, got {rho.shape}")
        b = self.baker
        if self.kind == "contractive":
            return b @ apply_noise(rho, self.kraus) @ b.conj().T
        if self.kind == "noiseless":
            return b @ rho @ b.conj().T
        # open: project out the escaping third, then stir
        u = b * self.projector[None, :]
        return u @ rho @ u.conj().T

    def apply_adjoint(self, x: np.ndarray) -> np.ndarray:
        """One step in the Heisenberg picture (adjoint of :meth:`apply`)."""
        if x.shape != (self.n, self.n):
            raise ValueError(f"observable must be {self.n} x {self.n}, got {x.shape}")
        b = self.baker
        if self.kind == "contractive":
            return apply_noise_adjoint(b.conj().T @ x @ b, self.kraus)
        if self.kind == "noiseless":
            return b.conj().T @ x @ b
        u = b * self.projector[None, :]
        return u.conj().T @ x @ u

    # -- vectorized access -----------------------------------------------------

    def matvec(self, v: np.ndarray, adjoint: bool = False) -> np.ndarray:
        """Matrix-free action on a column-stacked operator vector."""
        rho = unvec(v, self.n)
        out = self.apply_adjoint(rho) if adjoint else self.apply(rho)
        return vec(out)

    def as_linear_operator(self, adjoint: bool = False) -> LinearOperator:
        """SciPy ``LinearOperator`` view (for iterative eigensolvers)."""
        m = self.n * self.n
        fn: Callable[[np.ndarray], np.ndarray] = (
            (lambda v: self.matvec(v, adjoint=True))
            if adjoint
            else (lambda v: self.matvec(v))
        )
        return LinearOperator(shape=(m, m), matvec=fn, dtype=complex)

    # -- dense forms -------------------------------------------------------

    def effective_kraus(self) -> list[np.ndarray]:
        """Dense one-step Kraus operators ``B A[mu]`` (single ``U`` if closed/open)."""
        b = self.baker
        if self.kind == "contractive":
            out = []
            for mu, w in enumerate(self.kraus.weights):
                d = np.zeros((self.n, self.n), dtype=complex)
                d[:, mu : mu + w.size] = b[:, : w.size] * w[None, :]
                out.append(d)
            return out
        if self.kind == "noiseless":
            return [b.copy()]
        return [b * self.projector[None, :]]

    def matrix(self, force: bool = False) -> np.ndarray:
        """Dense ``n^2 x n^2`` matrix in the column-stacking convention.

        Refused for ``n > MATERIALIZE_MAX_DIM`` unless ``force=True``
        (raises :class:`MaterializationGuard`): above that size the matrix
        costs gigabytes and the matrix-free path should be used instead.
        The result is cached on the instance.
        """
        if self._dense is not None:
            return self._dense
        if self.n > MATERIALIZE_MAX_DIM and not force:
            raise MaterializationGuard(
                f"dense superoperator at n = {self.n} needs "
                f"{16 * self.n**4 / 1e9:.1f} GB; pass force=True to override "
                f"(guard at n = {MATERIALIZE_MAX_DIM})"
            )
        n = self.n
        ops = self.effective_kraus()
        # sum_mu kron(conj(D), D) through one Gram product over the Kraus
        # index: with flat[mu, a*n + i] = D_mu[a, i],
        #   t2[a*n + i, c*n + j] = sum_mu D[a, i] conj(D[c, j])
        # and the superoperator entry S[(c, a), (j, i)] = conj(D[c, j]) D[a, i]
        # is t4 with axes reordered to (c, a, j, i).
        flat = np.stack(ops).reshape(len(ops), n * n)
        t2 = flat.T @ flat.conj()
        t4 = t2.reshape(n, n, n, n)  # [a, i, c, j]
        dense = np.ascontiguousarray(t4.transpose(2, 0, 3, 1)).reshape(n * n, n * n)
        del t2, t4
        self._dense = dense
        return dense

    def hermitian_basis_matrix(self, force: bool = False) -> np.ndarray:
        """Real matrix of the map in an orthonormal Hermitian operator basis.

        Every kind here maps Hermitian operators to Hermitian operators, so
        in the basis of ``n`` diagonal projectors, ``n(n-1)/2`` symmetric
        and ``n(n-1)/2`` antisymmetric pair combinations the superoperator
        matrix is real with the same spectrum as :meth:`matrix`.  Halves
        the stored size and allows a real (faster) eigensolver, but the
        construction still peaks at O(n^4) bytes, so it shares the
        :data:`MATERIALIZE_MAX_DIM` guard (override with ``force=True``).
        """
        return hermitian_basis_matrix(self, force=force)


def hermitian_basis_matrix(superop: Superoperator, force: bool = False) -> np.ndarray:
    """Real superoperator matrix in the orthonormal Hermitian basis.

    Basis order: ``n`` diagonal units ``E_xx``; then for each column pair
    ``x < y`` the symmetric ``(E_xy + E_yx)/sqrt(2)`` and antisymmetric
    ``i (E_xy - E_yx)/sqrt(2)`` combinations, pairs enumerated in
    lexicographic ``(x, y)`` order.
    """
    n = superop.n
    if n > MATERIALIZE_MAX_DIM and not force:
        raise MaterializationGuard(
            f"real-basis superoperator at n = {n} peaks at "
            f"{24 * n**4 / 1e9:.1f} GB during construction; pass force=True "
            f"to override (guard at n = {MATERIALIZE_MAX_DIM})"
        )
    ops = superop.effective_kraus()
    flat = np.stack(ops).reshape(len(ops), n * n)
    # t4[a, i, c, j] = sum_mu D[a, i] conj(D[c, j]); the image of E_ij has
    # matrix elements t4[:, i, :, j] in the raw operator-unit basis.
    t2 = flat.T @ flat.conj()
    t4 = t2.reshape(n, n, n, n)

    m = n * n
    out = np.empty((m, m))
    npairs = n * (n - 1) // 2
    pair_x, pair_y = np.triu_indices(n, k=1)
    # row coordinates: image operator Y decomposed as
    #   diag rows:  Y[x, x].real
    #   sym rows:   sqrt(2) * Re Y[x, y]   (x < y)
    #   asym rows:  sqrt(2) * Im Y[x, y]
    inv_sqrt2 = 1.0 / math.sqrt(2.0)

    def put_column(col: int, y_img: np.ndarray) -> None:
        out[:n, col] = y_img[np.arange(n), np.arange(n)].real
        off = y_img[pair_x, pair_y]
        out[n : n + npairs, col] = math.sqrt(2.0) * off.real
        out[n + npairs :, col] = math.sqrt(2.0) * off.imag

    # diagonal basis elements E_xx
    for x in range(n):
        put_column(x, t4[:, x, :, x])
    # pair elements, symmetric then antisymmetric, one pair column at a time
    for idx in range(npairs):
        x = int(pair_x[idx])
        y = int(pair_y[idx])
        img_xy = t4[:, x, :, y]
        img_yx = t4[:, y, :, x]
        put_column(n + idx, inv_sqrt2 * (img_xy + img_yx))
        put_column(n + npairs + idx, 1j * inv_sqrt2 * (img_xy - img_yx))
    return out


def build_superoperator(
    n: int,
    kind: str = "contractive",
    eps: float | None = None,
) -> Superoperator:
    """Assemble the one-step superoperator of the requested map kind.

    Parameters
    ----------
    n:
        Hilbert space dimension.  Must be even (the unitary step needs it);
        the ``"open"`` kind additionally needs ``n % 6 == 0`` so the deleted
        middle third is aligned with whole basis states.
    kind:
        ``"contractive"`` (noise strength ``eps`` required), ``"noiseless"``
        (``eps`` ignored), or ``"open"``.
    eps:
        Noise strength in ``(0, 1]`` for the contractive kind.
    """
    if kind not in SUPEROP_KINDS:
        raise ValueError(f"unknown map kind {kind!r}; choose from {SUPEROP_KINDS}")
    if kind == "open":
        n = _check_dim(n, even=True, multiple_of=6)
    else:
        n = _check_dim(n, even=True)
    baker = build_baker_unitary(n)
    if kind == "contractive":
        if eps is None:
            raise ValueError("contractive kind requires an eps value")
        kraus = build_kraus(n, eps)
        return Superoperator(n=n, kind=kind, epsilon=kraus.epsilon, baker=baker, kraus=kraus)
    if kind == "noiseless":
        return Superoperator(n=n, kind=kind, epsilon=None, baker=baker)
    return Superoperator(
        n=n, kind=kind, epsilon=None, baker=baker, projector=opening_projector(n)
    )


def superop_matvec(superop: Superoperator, v: np.ndarray, adjoint: bool = False) -> np.ndarray:
    """Functional alias for :meth:`Superoperator.matvec`."""
    return superop.matvec(v, adjoint=adjoint)
