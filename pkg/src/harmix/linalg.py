"""Complex Hermitian linear algebra with positive-definiteness safeguards.

Every covariance object in this package (kernel Gram matrices, inducing
covariances, variational covariances) is Hermitian positive semidefinite by
construction but only up to floating-point closure, so factorizations go
through a shared jitter ladder instead of ad-hoc regularization at call
sites.

Conventions
-----------
* ``HermitianMatrix`` symmetrizes its input as ``(M + M^H)/2`` when the
  asymmetry is below a relative tolerance and rejects it otherwise; the
  stored array is therefore exactly Hermitian.
* Cholesky factors are lower triangular with real positive diagonal,
  ``L @ L^H = M + jitter*I``.
* The jitter ladder tries jitter 0, then ``1e-10 * trace/dim`` increasing
  tenfold up to ``1e-4 * trace/dim`` before raising
  :class:`NotPositiveDefinite`.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.linalg import solve_triangular

__all__ = [
    "NotHermitian",
    "NotPositiveDefinite",
    "ShapeMismatch",
    "HermitianMatrix",
    "LowerTriangularFactor",
    "cholesky_hermitian",
    "cholesky_ladder",
    "solve_hermitian",
    "logdet",
    "min_eigenvalue",
]

#: relative asymmetry above which a matrix is rejected instead of symmetrized
HERMITIAN_RTOL = 1e-10

#: first rung of the jitter ladder, as a fraction of trace/dim
LADDER_START = 1e-10

#: last rung of the jitter ladder, as a fraction of trace/dim
LADDER_STOP = 1e-4


class NotHermitian(ValueError):
    """Raised when a matrix is too asymmetric to be symmetrized away."""


class ShapeMismatch(ValueError):
    """Raised when operand shapes are incompatible."""


class NotPositiveDefinite(np.linalg.LinAlgError):
    """Raised when a matrix is not positive definite after allowed jitter.

    Usually signals invalid kernel parameters (e.g. a degenerate amplitude
    matrix) rather than a numerical accident.
    """


class HermitianMatrix:
    """Immutable complex Hermitian matrix.

    Parameters
    ----------
    entries : array_like, shape (dim, dim)
        Square complex (or real) matrix.  It is symmetrized as
        ``(M + M^H)/2`` when the asymmetry is below ``HERMITIAN_RTOL``
        relative to the largest entry, and rejected otherwise.
    """

    __slots__ = ("_a",)

    def __init__(self, entries: ArrayLike):
        a = np.asarray(entries, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeMismatch(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a.view(np.float64))):
            raise ValueError("matrix entries must be finite")
        asym = np.abs(a - a.conj().T).max(initial=0.0)
        scale = np.abs(a).max(initial=0.0)
        if asym > HERMITIAN_RTOL * max(scale, 1.0):
            raise NotHermitian(
                f"asymmetry {asym:.3e} exceeds {HERMITIAN_RTOL:.0e} * scale {scale:.3e}"
            )
        a = (a + a.conj().T) / 2.0
        a.flags.writeable = False
        self._a = a

    @classmethod
    def identity(cls, dim: int) -> "HermitianMatrix":
        return cls(np.eye(dim))

    @property
    def dim(self) -> int:
        return self._a.shape[0]

    @property
    def array(self) -> NDArray[np.complex128]:
        """The underlying (read-only) complex array."""
        return self._a

    def trace(self) -> float:
        return float(np.trace(self._a).real)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self._a)[0])

    def assert_psd(self, tol: float = 1e-8) -> None:
        """Raise :class:`NotPositiveDefinite` unless min eig >= -tol*trace."""
        lo = self.min_eigenvalue()
        floor = -tol * max(self.trace(), 0.0)
        if lo < floor:
            raise NotPositiveDefinite(
                f"min eigenvalue {lo:.3e} below PSD floor {floor:.3e}"
            )

    def cholesky(self, jitter: float = 0.0) -> "LowerTriangularFactor":
        return cholesky_hermitian(self, jitter)

    def __repr__(self) -> str:  # pragma: no cover
        return f"HermitianMatrix(dim={self.dim})"


class LowerTriangularFactor:
    """Lower Cholesky factor of ``M + jitter*I`` with solve/logdet support."""

    __slots__ = ("_l", "jitter")

    def __init__(self, lower: NDArray[np.complex128], jitter: float = 0.0):
        lower = np.asarray(lower, dtype=np.complex128)
        if lower.ndim != 2 or lower.shape[0] != lower.shape[1]:
            raise ShapeMismatch(f"expected a square factor, got shape {lower.shape}")
        self._l = lower
        self.jitter = float(jitter)

    @property
    def dim(self) -> int:
        return self._l.shape[0]

    @property
    def matrix(self) -> NDArray[np.complex128]:
        return self._l

    def solve(self, b: ArrayLike) -> NDArray[np.complex128]:
        """Solve ``(L L^H) x = b`` by forward/back substitution."""
        b = np.asarray(b, dtype=np.complex128)
        if b.shape[0] != self.dim:
            raise ShapeMismatch(
                f"factor dim {self.dim} incompatible with rhs of shape {b.shape}"
            )
        y = solve_triangular(self._l, b, lower=True)
        return solve_triangular(self._l.conj().T, y, lower=False)

    def solve_lower(self, b: ArrayLike) -> NDArray[np.complex128]:
        """Solve ``L y = b`` (half solve, useful for quadratic forms)."""
        b = np.asarray(b, dtype=np.complex128)
        if b.shape[0] != self.dim:
            raise ShapeMismatch(
                f"factor dim {self.dim} incompatible with rhs of shape {b.shape}"
            )
        return solve_triangular(self._l, b, lower=True)

    def logdet(self) -> float:
        """``log|det(L L^H)| = 2 * sum(log Re(L_ii))``."""
        return float(2.0 * np.sum(np.log(self._l.diagonal().real)))

    def reconstruct(self) -> NDArray[np.complex128]:
        return self._l @ self._l.conj().T


def _chol_or_none(a: NDArray[np.complex128]) -> NDArray[np.complex128] | None:
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return None


def cholesky_hermitian(m: HermitianMatrix, jitter: float = 0.0) -> LowerTriangularFactor:
    """Cholesky factor of ``M + jitter*I``.

    Parameters
    ----------
    m : HermitianMatrix
    jitter : float
        Nonnegative diagonal boost.

    Raises
    ------
    NotPositiveDefinite
        If the boosted matrix is still not positive definite.
    """
    if jitter < 0:
        raise ValueError("jitter must be nonnegative")
    a = m.array + jitter * np.eye(m.dim)
    lower = _chol_or_none(a)
    if lower is None:
        raise NotPositiveDefinite(
            f"matrix (dim {m.dim}) not positive definite at jitter {jitter:.3e}"
        )
    return LowerTriangularFactor(lower, jitter)


def cholesky_ladder(m: HermitianMatrix) -> LowerTriangularFactor:
    """Cholesky with the standard jitter ladder.

    Tries jitter 0, then ``LADDER_START * trace/dim`` growing tenfold up to
    ``LADDER_STOP * trace/dim``; raises :class:`NotPositiveDefinite` when the
    ladder is exhausted.
    """
    lower = _chol_or_none(m.array)
    if lower is not None:
        return LowerTriangularFactor(lower, 0.0)
    scale = m.trace() / m.dim
    if scale <= 0:
        raise NotPositiveDefinite("non-positive trace; jitter ladder cannot help")
    rel = LADDER_START
    while rel <= LADDER_STOP * (1 + 1e-12):
        jitter = rel * scale
        lower = _chol_or_none(m.array + jitter * np.eye(m.dim))
        if lower is not None:
            return LowerTriangularFactor(lower, jitter)
        rel *= 10.0
    raise NotPositiveDefinite(
        f"matrix (dim {m.dim}) not positive definite up to jitter "
        f"{LADDER_STOP:.0e} * trace/dim"
    )


def solve_hermitian(factor: LowerTriangularFactor, b: ArrayLike) -> NDArray[np.complex128]:
    """Solve ``(L L^H) X = B`` for a matrix or vector right-hand side."""
    return factor.solve(b)


def logdet(factor: LowerTriangularFactor) -> float:
    """Log absolute determinant of the factored matrix."""
    return factor.logdet()


def min_eigenvalue(m: HermitianMatrix | ArrayLike) -> float:
    """Smallest eigenvalue of a Hermitian matrix (LAPACK ``eigvalsh``)."""
    if isinstance(m, HermitianMatrix):
        return m.min_eigenvalue()
    return float(np.linalg.eigvalsh(np.asarray(m))[0])
