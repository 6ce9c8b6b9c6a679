"""Gaussian and label kernels, double centering and centered kernel-target alignment.

All functions are pure; nothing here keeps state between calls.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .exceptions import DegenerateKernelError, DegenerateLabelError, InputError, ParameterError

__all__ = [
    "CenteredKernel",
    "gaussian_kernel",
    "cross_gaussian_kernel",
    "label_kernel",
    "center",
    "alignment",
    "kernel_target_alignment",
    "gaussian_alignment",
    "median_heuristic_sigma",
]

# Centered kernels with ||C||_F below this (times m) are treated as zero.
DEGENERATE_NORM_TOL = 1e-12


class CenteredKernel:
    """A double-centered kernel matrix with its Frobenius norm cached.

    Parameters
    ----------
    entries : ndarray of shape (m, m)
        Symmetric matrix whose rows and columns sum to zero.
    """

    __slots__ = ("entries", "frobenius_norm")

    def __init__(self, entries: np.ndarray):
        self.entries = entries
        self.frobenius_norm = float(np.sqrt(np.einsum("ij,ij->", entries, entries)))

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def _check_sigma(sigma) -> float:
    sigma = float(sigma)
    if not np.isfinite(sigma) or sigma <= 0:
        raise ParameterError(f"sigma must be positive and finite, got {sigma!r}")
    return sigma


def _as_sample_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InputError(f"expected a 2-d sample matrix, got shape {X.shape}")
    if X.shape[0] < 2 or X.shape[1] < 1:
        raise InputError(f"need at least 2 samples and 1 feature, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InputError("sample matrix contains non-finite entries")
    return X


def gaussian_kernel(X, sigma) -> np.ndarray:
    """Gaussian kernel ``K[i, j] = exp(-sigma * ||X[i] - X[j]||^2)``.

    Squared distances are accumulated per pair, so the result is exactly
    symmetric with a unit diagonal.
    """
    X = _as_sample_matrix(X)
    sigma = _check_sigma(sigma)
    sq = squareform(pdist(X, "sqeuclidean"))
    K = np.exp(-sigma * sq)
    return K


def cross_gaussian_kernel(A, B, sigma) -> np.ndarray:
    """Rectangular Gaussian kernel between rows of ``A`` and rows of ``B``."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    sigma = _check_sigma(sigma)
    return np.exp(-sigma * cdist(A, B, "sqeuclidean"))


def _label_kind(y: np.ndarray) -> str:
    values = np.unique(y)
    if values.size == 2 and set(values.tolist()) == {-1.0, 1.0}:
        return "binary"
    return "multiclass"


def label_kernel(y, kind: str = "auto") -> np.ndarray:
    """Kernel on the targets.

    ``kind="linear"`` gives ``y y^T`` (binary +/-1 labels), ``kind="delta"``
    gives 1 for equal labels and 0 otherwise.  ``"auto"`` picks ``linear``
    for +/-1 labels and ``delta`` for anything else.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size < 2:
        raise InputError("need at least 2 labels")
    if not np.all(np.isfinite(y)):
        raise InputError("labels contain non-finite entries")
    if np.all(y == y[0]):
        raise DegenerateLabelError("label vector contains a single class")
    if kind == "auto":
        kind = "linear" if _label_kind(y) == "binary" else "delta"
    if kind == "linear":
        return np.outer(y, y)
    if kind == "delta":
        return (y[:, None] == y[None, :]).astype(np.float64)
    raise ParameterError(f"unknown label kernel {kind!r}")


def center(K) -> CenteredKernel:
    """Double-center ``K``, i.e. compute ``H K H`` with ``H = I - 11^T/m``.

    Implemented as ``K - row means - column means + grand mean``.
    """
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise InputError(f"kernel must be square, got shape {K.shape}")
    if K.shape[0] < 2:
        raise InputError("kernel must be at least 2x2")
    col_means = K.mean(axis=0)
    row_means = K.mean(axis=1)
    C = K - row_means[:, None]
    C -= col_means[None, :]
    C += col_means.mean()
    # mirror to keep exact symmetry
    C = 0.5 * (C + C.T)
    return CenteredKernel(C)


def alignment(Cx: CenteredKernel, Cy: CenteredKernel) -> float:
    """Centered alignment ``<Cx, Cy>_F / (||Cx||_F ||Cy||_F)``, a value in [-1, 1]."""
    if not isinstance(Cx, CenteredKernel):
        Cx = CenteredKernel(np.asarray(Cx, dtype=np.float64))
    if not isinstance(Cy, CenteredKernel):
        Cy = CenteredKernel(np.asarray(Cy, dtype=np.float64))
    if Cx.entries.shape != Cy.entries.shape:
        raise InputError(f"kernel shapes differ: {Cx.entries.shape} vs {Cy.entries.shape}")
    m = Cx.m
    for name, C in (("input", Cx), ("target", Cy)):
        if C.frobenius_norm < DEGENERATE_NORM_TOL * m:
            raise DegenerateKernelError(f"centered {name} kernel has zero Frobenius norm")
    inner = float(np.einsum("ij,ij->", Cx.entries, Cy.entries))
    value = inner / (Cx.frobenius_norm * Cy.frobenius_norm)
    return min(1.0, max(-1.0, value))


def kernel_target_alignment(X, y, sigma, label_kind: str = "auto") -> float:
    """Convenience wrapper: alignment of the centered Gaussian and label kernels."""
    return alignment(center(gaussian_kernel(X, sigma)), center(label_kernel(y, label_kind)))


def median_heuristic_sigma(X) -> float:
    """Inverse of the median squared pairwise distance between rows of ``X``."""
    X = _as_sample_matrix(X)
    d = pdist(X, "sqeuclidean")
    med = float(np.median(d))
    if med <= 0:
        positive = d[d > 0]
        if positive.size == 0:
            raise InputError("all rows are identical; median distance is zero")
        med = float(np.median(positive))
    return 1.0 / med


def _label_features(y: np.ndarray, kind: str) -> np.ndarray:
    """Explicit feature map ``Phi`` with ``label_kernel(y) == Phi @ Phi.T``."""
    if kind == "auto":
        kind = "linear" if _label_kind(y) == "binary" else "delta"
    if kind == "linear":
        return y[:, None]
    if kind == "delta":
        classes = np.unique(y)
        return (y[:, None] == classes[None, :]).astype(np.float64)
    raise ParameterError(f"unknown label kernel {kind!r}")


def gaussian_alignment(Z, sigma, y, label_kind: str = "auto") -> float:
    """Fused ``alignment(center(gaussian_kernel(Z)), center(label_kernel(y)))``.

    Works on a single m x m buffer, centered in place, and never forms the
    label kernel:

    * ``<HKH, HLH> = tr(W' HKH W)`` with ``W = H Phi`` and ``L = Phi Phi'``
    * ``||HLH|| = ||W'W||_F``

    Used on the hot path of the selector.  Inputs are assumed validated.
    """
    Z = np.asarray(Z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    m = Z.shape[0]
    if np.all(y == y[0]):
        raise DegenerateLabelError("label vector contains a single class")
    G = Z @ Z.T
    sq = np.einsum("ij,ij->i", Z, Z)
    G *= -2.0
    G += sq[:, None]
    G += sq[None, :]
    np.maximum(G, 0.0, out=G)
    G *= -float(sigma)
    np.exp(G, out=G)
    np.fill_diagonal(G, 1.0)

    # center in place; the closed form for ||HKH|| cancels badly when K is nearly constant
    mu = G.mean(axis=1)
    G -= mu[:, None]
    G -= mu[None, :]
    G += mu.mean()
    c2 = float(np.vdot(G, G))
    if c2 <= (DEGENERATE_NORM_TOL * m) ** 2:
        raise DegenerateKernelError("centered input kernel has zero Frobenius norm")

    W = _label_features(y, label_kind)
    W = W - W.mean(axis=0)
    inner = float(np.einsum("ij,ij->", W, G @ W))
    ynorm = float(np.linalg.norm(W.T @ W))
    value = inner / (np.sqrt(c2) * ynorm)
    return min(1.0, max(-1.0, value))
