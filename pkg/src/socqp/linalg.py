"""Dense symmetric linear algebra kernel.

Eigendecomposition, PSD square roots, numerical rank, null/range bases and
dimensions of subspace unions.  Everything here is a pure function of its
inputs; tolerances are explicit arguments with one shared default so that the
rank-based certificates built on top of this module are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InvalidInput, InvalidMatrix, NotPsd

# Shared relative tolerance for every rank decision in the package.
DEFAULT_RANK_TOL = 1e-8


def _packed_size(n: int) -> int:
    return n * (n + 1) // 2


@dataclass
class SymMatrix:
    """Real symmetric matrix stored as its packed upper triangle (row-major).

    The packed storage makes ``entries[i][j] == entries[j][i]`` hold exactly;
    a dense symmetric view is materialized (and cached) on demand.
    """

    n: int
    packed: np.ndarray
    _dense: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.packed = np.asarray(self.packed, dtype=float).reshape(-1)
        if self.n <= 0:
            raise InvalidMatrix(f"order must be positive, got {self.n}")
        if self.packed.size != _packed_size(self.n):
            raise InvalidMatrix(
                f"packed triangle of an order-{self.n} matrix needs "
                f"{_packed_size(self.n)} entries, got {self.packed.size}"
            )
        if not np.all(np.isfinite(self.packed)):
            raise InvalidMatrix("matrix entries must be finite")

    @classmethod
    def from_dense(cls, a, *, sym_tol: float = 1e-10) -> "SymMatrix":
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidMatrix(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidMatrix("matrix entries must be finite")
        scale = max(1.0, float(np.abs(a).max()))
        if np.abs(a - a.T).max() > sym_tol * scale:
            raise InvalidMatrix("matrix is not symmetric within tolerance")
        n = a.shape[0]
        sym = 0.5 * (a + a.T)
        iu = np.triu_indices(n)
        return cls(n, sym[iu])

    @classmethod
    def identity(cls, n: int) -> "SymMatrix":
        return cls.from_dense(np.eye(n))

    @classmethod
    def zeros(cls, n: int) -> "SymMatrix":
        return cls(n, np.zeros(_packed_size(n)))

    def dense(self) -> np.ndarray:
        if self._dense is None:
            a = np.zeros((self.n, self.n))
            iu = np.triu_indices(self.n)
            a[iu] = self.packed
            a = a + np.triu(a, 1).T
            self._dense = a
        return self._dense

    def __matmul__(self, other):
        return self.dense() @ other

    def quad(self, x) -> float:
        """Evaluate the quadratic form x' M x."""
        x = np.asarray(x, dtype=float)
        return float(x @ (self.dense() @ x))


@dataclass
class SubspaceBasis:
    """Orthonormal basis of a subspace of R^n (possibly zero-dimensional)."""

    n: int
    columns: np.ndarray  # shape (n, k), orthonormal columns

    def __post_init__(self):
        self.columns = np.asarray(self.columns, dtype=float).reshape(self.n, -1)
        k = self.columns.shape[1]
        if k:
            gram = self.columns.T @ self.columns
            if np.abs(gram - np.eye(k)).max() > 1e-10:
                raise InvalidInput("basis columns are not orthonormal within 1e-10")

    @property
    def dim(self) -> int:
        return self.columns.shape[1]


def sym_eig(m: SymMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Uses the tridiagonalization + implicit QL/QR LAPACK path (``syev``) so
    repeated runs are bit-identical.  Returns ``(w, v)`` with ``m = v diag(w) v'``.
    """
    a = m.dense()
    w, v = scipy.linalg.eigh(a, driver="ev")
    return w[::-1].copy(), v[:, ::-1].copy()


def psd_sqrt(m: SymMatrix, tol: float = DEFAULT_RANK_TOL) -> SymMatrix:
    """Symmetric PSD square root; eigenvalues in [-tol*scale, 0) are clamped to 0."""
    w, v = sym_eig(m)
    scale = max(1.0, float(w[0])) if w.size else 1.0
    if w[-1] < -tol * scale:
        raise NotPsd(f"minimum eigenvalue {w[-1]:.3e} below -{tol:.1e}*{scale:.3e}")
    w = np.clip(w, 0.0, None)
    root = (v * np.sqrt(w)) @ v.T
    return SymMatrix.from_dense(0.5 * (root + root.T))


def numerical_rank(vectors, tol_rel: float = DEFAULT_RANK_TOL) -> int:
    """Rank of the span of a list of vectors: singular values > tol_rel * max."""
    vecs = [np.asarray(v, dtype=float).reshape(-1) for v in vectors]
    if not vecs:
        return 0
    n = vecs[0].size
    if any(v.size != n for v in vecs):
        raise InvalidInput("all vectors must share the same ambient dimension")
    a = np.column_stack(vecs)
    sv = scipy.linalg.svdvals(a)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > tol_rel * sv[0]))


def _split_spectrum(m: SymMatrix, tol_rel: float):
    w, v = sym_eig(m)
    scale = float(np.abs(w).max()) if w.size else 0.0
    thresh = tol_rel * max(scale, 1e-300)
    keep = np.abs(w) > thresh
    return v[:, keep], v[:, ~keep]


def null_basis(m: SymMatrix, tol_rel: float = DEFAULT_RANK_TOL) -> SubspaceBasis:
    """Orthonormal basis of the null space at relative eigenvalue tolerance."""
    _, kernel = _split_spectrum(m, tol_rel)
    return SubspaceBasis(m.n, kernel)


def range_basis(m: SymMatrix, tol_rel: float = DEFAULT_RANK_TOL) -> SubspaceBasis:
    """Orthonormal basis of the range; complements null_basis exactly."""
    image, _ = _split_spectrum(m, tol_rel)
    return SubspaceBasis(m.n, image)


def union_dim(bases, extra_vectors=(), tol_rel: float = DEFAULT_RANK_TOL) -> int:
    """Dimension of span(union of subspaces and extra vectors).

    Computed as the numerical rank of all stacked columns.
    """
    cols = []
    n = None
    for b in bases:
        if n is None:
            n = b.n
        elif b.n != n:
            raise InvalidInput("subspace ambient dimensions differ")
        cols.extend(b.columns.T)
    for v in extra_vectors:
        v = np.asarray(v, dtype=float).reshape(-1)
        if n is None:
            n = v.size
        elif v.size != n:
            raise InvalidInput("vector dimension differs from subspace dimension")
        cols.append(v)
    return numerical_rank(cols, tol_rel)


def null_space_of_rows(rows, n: int, tol_rel: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of {x : r @ x = 0 for every row r}.

    Rows may be an empty list, in which case the basis is the identity.
    """
    rows = [np.asarray(r, dtype=float).reshape(-1) for r in rows]
    rows = [r for r in rows if np.linalg.norm(r) > 0.0]
    if not rows:
        return np.eye(n)
    a = np.vstack(rows)
    if a.shape[1] != n:
        raise InvalidInput("row dimension mismatch")
    u, sv, vt = scipy.linalg.svd(a, full_matrices=True)
    if sv.size and sv[0] > 0:
        rank = int(np.count_nonzero(sv > tol_rel * sv[0]))
    else:
        rank = 0
    return vt[rank:].T.copy()
