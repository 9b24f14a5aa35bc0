"""Dense tensor primitives: contraction, truncated SVD and QR helpers.

Tensors are plain complex ``numpy`` arrays. The helpers here validate
dimensions and give the SVD a deterministic truncation rule so that the
higher layers never have to repeat that logic.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError

__all__ = ["SvdResult", "contract", "truncated_svd", "qr_positive", "lq_positive"]


@dataclass(frozen=True)
class SvdResult:
    """Result of :func:`truncated_svd`.

    Attributes
    ----------
    u : ndarray, shape (m, r)
    s : ndarray, shape (r,)
        Non-increasing, non-negative singular values that were kept.
    vh : ndarray, shape (r, n)
    discarded_weight : float
        Sum of squares of the dropped singular values divided by the
        total sum of squares (0 for a zero matrix).
    """

    u: np.ndarray
    s: np.ndarray
    vh: np.ndarray
    discarded_weight: float

    @property
    def rank(self):
        return self.s.shape[0]


def contract(a, axes_a, b, axes_b):
    """Contract ``a`` and ``b`` over the given axis pairs.

    The result keeps the free axes of ``a`` followed by those of ``b``,
    in their original order.

    Raises
    ------
    DimensionError
        If the paired axes have different lengths.
    """
    axes_a = tuple(axes_a)
    axes_b = tuple(axes_b)
    if len(axes_a) != len(axes_b):
        raise DimensionError("axis lists must have equal length")
    for i, j in zip(axes_a, axes_b):
        if a.shape[i] != b.shape[j]:
            raise DimensionError(
                f"cannot contract axis {i} (dim {a.shape[i]}) with axis {j} (dim {b.shape[j]})"
            )
    return np.tensordot(a, b, axes=(axes_a, axes_b))


def _svd(m):
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge; gesvd is slower but robust
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")


def truncated_svd(m, max_rank=None, cutoff=0.0):
    """Singular value decomposition with rank and weight truncation.

    Parameters
    ----------
    m : ndarray, shape (rows, cols)
    max_rank : int, optional
        Keep at most this many singular values.
    cutoff : float
        Trailing singular values whose squared relative weight
        ``s_k**2 / sum(s**2)`` falls below ``cutoff`` are dropped.

    Returns
    -------
    SvdResult
        At least one singular value is always kept, so a zero matrix
        yields a single zero singular value.
    """
    if m.ndim != 2:
        raise DimensionError("truncated_svd expects a matrix")
    if max_rank is not None and max_rank < 1:
        raise ValueError("max_rank must be positive")
    u, s, vh = _svd(m)
    total = float(np.sum(s * s))
    keep = s.shape[0]
    if max_rank is not None:
        keep = min(keep, max_rank)
    if cutoff > 0.0:
        if total > 0.0:
            above = np.nonzero((s * s) / total >= cutoff)[0]
            keep = min(keep, int(above[-1]) + 1 if above.size else 1)
        else:
            keep = 1
    keep = max(keep, 1)
    discarded = float(np.sum(s[keep:] ** 2)) / total if total > 0.0 else 0.0
    return SvdResult(u[:, :keep], s[:keep], vh[:keep, :], discarded)


def qr_positive(m):
    """Reduced QR factorisation with a non-negative diagonal in ``r``."""
    q, r = np.linalg.qr(m)
    d = np.diagonal(r)
    ph = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1.0), 1.0)
    return q * ph[None, :], r * np.conj(ph)[:, None]


def lq_positive(m):
    """Reduced LQ factorisation ``m = l @ q`` with orthonormal rows in ``q``."""
    q, r = qr_positive(m.conj().T)
    return r.conj().T, q.conj().T
