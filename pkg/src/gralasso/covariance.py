"""Correlation and covariance assembly for response-first data tables.

The Gaussian-rank correlation matrix is the Pearson matrix of the columnwise
normal scores, so it is positive semi-definite by construction and immune to
cellwise outliers up to rank displacement. Scales enter separately through
``assemble_covariance``, which also exposes the square-root factors used by
the re-parameterised regression loss.
"""

from dataclasses import dataclass

import numpy as np

from .data import DataMatrix
from .robust_stats import RobustSummary, normal_scores, ranks

__all__ = [
    "CorrelationMatrix",
    "CovarianceModel",
    "SymmetricEigen",
    "score_matrix",
    "pearson_corr_matrix",
    "gaussian_rank_corr_matrix",
    "spearman_corr_matrix",
    "assemble_covariance",
    "symmetric_eigen",
    "sqrt_factorize",
]


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric unit-diagonal correlation matrix, response in slot 0."""

    matrix: np.ndarray
    estimator: str
    columns: tuple | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("correlation matrix must be square")
        if np.max(np.abs(m - m.T)) > 1e-12:
            raise ValueError("correlation matrix must be symmetric")
        if np.max(np.abs(np.diag(m) - 1.0)) > 1e-12:
            raise ValueError("correlation matrix must have a unit diagonal")
        object.__setattr__(self, "matrix", m)

    @property
    def p(self) -> int:
        return self.matrix.shape[0] - 1

    @property
    def yy(self) -> float:
        return float(self.matrix[0, 0])

    @property
    def xy(self) -> np.ndarray:
        return self.matrix[1:, 0]

    @property
    def xx(self) -> np.ndarray:
        return self.matrix[1:, 1:]


@dataclass(frozen=True)
class CovarianceModel:
    """Covariance sigma = S R S with its partitions and square-root factors.

    ``sqrt_v`` is the first column of the symmetric square root and
    ``sqrt_w`` the remaining columns, so that
    sqrt_v.T @ sqrt_v = sigma_yy, sqrt_w.T @ sqrt_v = sigma_xy and
    sqrt_w.T @ sqrt_w = sigma_xx.
    """

    sigma: np.ndarray
    scales: np.ndarray
    sqrt_v: np.ndarray
    sqrt_w: np.ndarray
    columns: tuple | None = None

    @property
    def p(self) -> int:
        return self.sigma.shape[0] - 1

    @property
    def yy(self) -> float:
        return float(self.sigma[0, 0])

    @property
    def xy(self) -> np.ndarray:
        return self.sigma[1:, 0]

    @property
    def xx(self) -> np.ndarray:
        return self.sigma[1:, 1:]


@dataclass(frozen=True)
class SymmetricEigen:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _column_names(Z) -> tuple:
    if isinstance(Z, DataMatrix):
        return Z.columns
    Z = np.asarray(Z)
    return tuple(f"col{j}" for j in range(Z.shape[1]))


def _as_values(Z) -> np.ndarray:
    if isinstance(Z, DataMatrix):
        return Z.values
    arr = np.asarray(Z, dtype=float)
    if arr.ndim != 2:
        raise ValueError("expected a 2-D data table")
    if not np.all(np.isfinite(arr)):
        raise ValueError("data contains non-finite values")
    return arr


def score_matrix(Z, kind: str = "gaussian-rank") -> np.ndarray:
    """Columnwise pseudo-data transform.

    "gaussian-rank" maps each column to its normal scores, "spearman" to its
    centred mid-ranks, and "pearson" to (x - mean) / sd. Pearson correlation
    of the result equals the corresponding correlation estimator of the
    input, and every kind is (near-)mean-zero so pseudo-data residuals carry
    no constant offset.
    """
    values = _as_values(Z)
    names = _column_names(Z)
    n = values.shape[0]
    out = np.empty_like(values)
    for j in range(values.shape[1]):
        col = values[:, j]
        if kind == "gaussian-rank":
            if np.all(col == col[0]):
                raise ValueError(f"degenerate column {names[j]!r}: all values tied")
            out[:, j] = normal_scores(col)
        elif kind == "spearman":
            if np.all(col == col[0]):
                raise ValueError(f"degenerate column {names[j]!r}: all values tied")
            out[:, j] = ranks(col) - 0.5 * (n + 1)
        elif kind == "pearson":
            sd = float(np.std(col, ddof=1)) if n > 1 else 0.0
            if sd <= 0.0:
                raise ValueError(f"zero-variance column {names[j]!r}")
            out[:, j] = (col - np.mean(col)) / sd
        else:
            raise ValueError(f"unknown score kind {kind!r}")
    return out


def _pearson_of_values(values: np.ndarray, names=None) -> np.ndarray:
    n = values.shape[0]
    if n < 2:
        raise ValueError("need at least two observations")
    centered = values - values.mean(axis=0)
    sd = np.sqrt((centered * centered).sum(axis=0))
    if np.any(sd <= 0.0):
        j = int(np.flatnonzero(sd <= 0.0)[0])
        name = names[j] if names is not None else f"col{j}"
        raise ValueError(f"zero-variance column {name!r}")
    std = centered / sd
    corr = std.T @ std
    corr = 0.5 * (corr + corr.T)
    np.fill_diagonal(corr, 1.0)
    return np.clip(corr, -1.0, 1.0)


def pearson_corr_matrix(Z) -> CorrelationMatrix:
    """Product-moment correlation matrix; errors on a zero-variance column."""
    values = _as_values(Z)
    names = _column_names(Z)
    return CorrelationMatrix(_pearson_of_values(values, names), "pearson", names)


def gaussian_rank_corr_matrix(Z) -> CorrelationMatrix:
    """Pearson correlation of the columnwise normal scores.

    Positive semi-definite by construction and invariant under strictly
    monotone transforms of each column.
    """
    values = _as_values(Z)
    if values.shape[0] < 3:
        raise ValueError("need at least three observations")
    names = _column_names(Z)
    scores = score_matrix(Z, "gaussian-rank")
    return CorrelationMatrix(_pearson_of_values(scores, names), "gaussian-rank", names)


def spearman_corr_matrix(Z) -> CorrelationMatrix:
    """Pearson correlation of the columnwise mid-ranks."""
    values = _as_values(Z)
    if values.shape[0] < 3:
        raise ValueError("need at least three observations")
    names = _column_names(Z)
    scores = score_matrix(Z, "spearman")
    return CorrelationMatrix(_pearson_of_values(scores, names), "spearman", names)


def assemble_covariance(R: CorrelationMatrix, summaries) -> CovarianceModel:
    """Combine a correlation matrix with per-column scales into
    sigma[i, j] = s_i * R[i, j] * s_j, plus its square-root factors."""
    scales = np.asarray([s.scale if isinstance(s, RobustSummary) else float(s)
                         for s in summaries], dtype=float)
    if scales.size != R.matrix.shape[0]:
        raise ValueError(
            f"{scales.size} scales for a {R.matrix.shape[0]}-column matrix"
        )
    if np.any(scales <= 0.0):
        j = int(np.flatnonzero(scales <= 0.0)[0])
        name = R.columns[j] if R.columns else f"col{j}"
        raise ValueError(f"nonpositive scale for column {name!r}")
    sigma = R.matrix * np.outer(scales, scales)
    v, w = sqrt_factorize(sigma)
    return CovarianceModel(sigma=sigma, scales=scales, sqrt_v=v, sqrt_w=w,
                           columns=R.columns)


def symmetric_eigen(A, max_sweeps: int = 100) -> SymmetricEigen:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps run until every off-diagonal magnitude falls below
    1e-12 * ||A||_F. Eigenvalues are returned in descending order with the
    matching orthonormal eigenvector columns.
    """
    A = np.array(A, dtype=float, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > 1e-10 * scale:
        raise ValueError("matrix must be symmetric")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    # Frobenius norm is invariant under the rotations, so the stopping
    # threshold is fixed up front.
    fnorm = float(np.linalg.norm(A, "fro"))
    thresh = 1e-12 * fnorm
    if n == 1 or fnorm == 0.0:
        return _sorted_eigen(np.diag(A).copy(), V)

    converged = False
    for _ in range(max_sweeps):
        off = np.abs(A - np.diag(np.diag(A))).max()
        if off < thresh:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < thresh:
                    continue
                theta = 0.5 * (A[q, q] - A[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = 0.0
                A[q, p] = 0.0
                v_p = V[:, p].copy()
                V[:, p] = c * v_p - s * V[:, q]
                V[:, q] = s * v_p + c * V[:, q]
    if not converged and np.abs(A - np.diag(np.diag(A))).max() >= thresh:
        raise RuntimeError("Jacobi eigendecomposition did not converge")
    return _sorted_eigen(np.diag(A).copy(), V)


def _sorted_eigen(eigenvalues: np.ndarray, V: np.ndarray) -> SymmetricEigen:
    order = np.argsort(-eigenvalues, kind="stable")
    return SymmetricEigen(eigenvalues=eigenvalues[order], eigenvectors=V[:, order])


def sqrt_factorize(sigma):
    """Symmetric square root of a PSD matrix, split into its first column v
    and the remaining columns W.

    Eigenvalues in [-1e-8 * ||sigma||, 0) are clipped to zero (floating-point
    fuzz); anything more negative raises.
    """
    sigma = np.asarray(sigma, dtype=float)
    eig = symmetric_eigen(sigma)
    lam = eig.eigenvalues
    bound = 1e-8 * max(1e-300, float(np.max(np.abs(lam))))
    if lam[-1] < -bound:
        raise ValueError("not positive semi-definite")
    root = (eig.eigenvectors * np.sqrt(np.clip(lam, 0.0, None))) @ eig.eigenvectors.T
    return root[:, 0].copy(), root[:, 1:].copy()
