"""Small dense vectors and matrices with indefinite (Lorentzian) inner products.

Vectors are plain 1-d numpy arrays; the ambient backend that interprets them
is carried by the AmbientSpace object that produced the metric matrix.  All
dimensions here are tiny (n <= 8), so everything is dense and allocation-light.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateFrameError, DimensionMismatchError

__all__ = [
    "inner",
    "causal_character",
    "orthonormalize_signature",
    "numeric_rank",
    "project_out_span",
]


def inner(u, v, G) -> float:
    """Indefinite inner product u^T G v.

    G must be the (symmetric) metric matrix at the evaluation point; u and v
    must have matching length.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    G = np.asarray(G, dtype=float)
    if u.shape != v.shape or G.shape != (u.shape[0], u.shape[0]):
        raise DimensionMismatchError(
            f"inner: shapes {u.shape}, {v.shape}, metric {G.shape}")
    return float(u @ G @ v)


def causal_character(v, G, tol: float = 1e-10) -> str:
    """Classify v as 'spacelike', 'null' or 'timelike' by the sign of <v,v>.

    The null band is |<v,v>| < tol * max(1, v.v) so that near-null vectors of
    any magnitude are flagged.
    """
    s = inner(v, v, G)
    scale = max(1.0, float(np.dot(v, v)))
    if abs(s) < tol * scale:
        return "null"
    return "spacelike" if s > 0 else "timelike"


def project_out_span(x, basis, G):
    """Return x minus its G-orthogonal projection onto span(basis).

    Works for mildly non-orthogonal bases: the projection coefficients solve
    the Gram system exactly instead of assuming the basis orthonormal.
    """
    if not basis:
        return np.array(x, dtype=float)
    B = np.column_stack(basis)
    M = B.T @ G @ B
    rhs = B.T @ G @ np.asarray(x, dtype=float)
    coef = np.linalg.solve(M, rhs)
    return np.asarray(x, dtype=float) - B @ coef


def orthonormalize_signature(vectors, G, tol: float = 1e-10,
                             timelike_index: int | None = None):
    """Signature-aware Gram-Schmidt.

    Returns (frame, signs): pairwise G-orthogonal vectors with |<f_i,f_i>| = 1
    and signs recording timelike (-1) versus space-like (+1) directions.
    Output i lies in the span of inputs 1..i and keeps a positive component
    along input i, which makes the result deterministic.

    When ``timelike_index`` is given, that candidate is processed first (the
    adapted-frame convention that stabilizes the sign of the timelike leg).

    Raises DegenerateFrameError when an intermediate vector is numerically
    null or dependent (|<w,w>| below tol relative to its Euclidean size).
    """
    vecs = [np.asarray(v, dtype=float) for v in vectors]
    order = list(range(len(vecs)))
    if timelike_index is not None:
        order.insert(0, order.pop(timelike_index))
    G = np.asarray(G, dtype=float)
    frame: list[np.ndarray] = []
    signs: list[int] = []
    for idx in order:
        w = project_out_span(vecs[idx], frame, G)
        s2 = inner(w, w, G)
        euclid = float(np.dot(w, w))
        v_euclid = float(np.dot(vecs[idx], vecs[idx]))
        if euclid < tol * max(v_euclid, 1e-300):
            raise DegenerateFrameError(
                f"candidate {idx} is linearly dependent on its predecessors")
        if abs(s2) < tol * max(euclid, 1e-300):
            raise DegenerateFrameError(
                f"candidate {idx} spans a null direction (<w,w> = {s2:.3e})")
        sign = 1 if s2 > 0 else -1
        frame.append(w / np.sqrt(abs(s2)))
        signs.append(sign)
    return frame, signs


def numeric_rank(vectors, G, tol: float = 1e-8) -> int:
    """Rank of the Gram matrix of ``vectors`` under G.

    Counts singular values above tol times the largest one.  An empty list or
    an all-zero Gram matrix has rank 0.
    """
    if tol <= 0:
        raise ValueError("numeric_rank: tol must be positive")
    vecs = [np.asarray(v, dtype=float) for v in vectors]
    if not vecs:
        return 0
    B = np.column_stack(vecs)
    M = B.T @ np.asarray(G, dtype=float) @ B
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol * sv[0]))
