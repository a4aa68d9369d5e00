"""Matrix exponentials for dense generators.

``expm`` is a degree-13 Pade approximant with scaling and squaring;
``expm_action`` applies exp(tA) to a vector, by uniformization when the
chain is not too stiff and by the dense exponential otherwise.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.special import gammaln, pdtrc

log = logging.getLogger(__name__)

# dense products are compute bound, matrix-vector products memory bound
MATVEC_RATIO = 50.0

# backward-error bound for the degree-13 approximant
THETA13 = 5.371920351148152
_B13 = (64764752532480000., 32382376266240000., 7771770303897600., 1187353796428800.,
        129060195264000., 10559470521600., 670442572800., 33522128640., 1323241920.,
        40840800., 960960., 16380., 182., 1.)


@dataclass(frozen=True)
class ExpmConfig:
    """``method`` is ``"pade"``, ``"uniformization"`` or ``"auto"``."""

    method: str = "auto"
    tol: float = 1e-12
    max_terms: int = 20000

    def __post_init__(self):
        if self.method not in ("pade", "uniformization", "auto"):
            raise ValueError(f"unknown exponential method {self.method!r}")
        if not (0 < self.tol < 1):
            raise ValueError("tol must be in (0, 1)")


def _pade13(A: np.ndarray) -> tuple[np.ndarray, int]:
    """Pade approximant of exp(A / 2^s) and the scaling power s."""
    n = A.shape[0]
    norm = np.linalg.norm(A, 1)
    if not np.isfinite(norm):
        raise FloatingPointError("matrix has non-finite entries")
    s = 0 if norm <= THETA13 else int(math.ceil(math.log2(norm / THETA13)))
    A = A / 2.0 ** s
    b = _B13
    d = np.arange(n)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    # odd part U, built with few n x n temporaries
    W = b[13] * A6
    W += b[11] * A4
    W += b[9] * A2
    Z = A6 @ W
    Z += b[7] * A6
    Z += b[5] * A4
    Z += b[3] * A2
    Z[d, d] += b[1]
    U = A @ Z
    del Z
    # even part V
    W = b[12] * A6
    W += b[10] * A4
    W += b[8] * A2
    V = A6 @ W
    del W
    V += b[6] * A6
    V += b[4] * A4
    V += b[2] * A2
    V[d, d] += b[0]
    del A2, A4, A6, A
    P = V + U
    V -= U
    del U
    lu = linalg.lu_factor(V, overwrite_a=True, check_finite=False)
    del V
    return linalg.lu_solve(lu, P, overwrite_b=True, check_finite=False), s


def expm(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("expm needs a square matrix")
    if n == 0:
        return A.copy()
    R, s = _pade13(A)
    for _ in range(s):
        R = R @ R
    return R


def _pade_action(A: np.ndarray, v: np.ndarray, t: float) -> np.ndarray:
    """exp(tA) v, finishing the squaring phase with repeated products on v.

    The last few squarings of a large matrix cost more than applying the
    partially squared matrix to v a few dozen times.
    """
    n = A.shape[0]
    R, s = _pade13(t * A)
    # a product with v is ~ n/MATVEC_RATIO times cheaper than a squaring
    keep = min(s, max(0, int(math.log2(max(n / MATVEC_RATIO, 1.0)))))
    for _ in range(s - keep):
        R = R @ R
    out = v
    for _ in range(2 ** keep):
        out = R @ out
    return out


def _poisson_weights(qt: float, tol: float, max_terms: int):
    """Poisson(qt) probabilities for k = 0..K with tail mass below tol."""
    lo, hi = int(qt), max_terms
    if pdtrc(hi, qt) > tol:
        return None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pdtrc(mid, qt) <= tol:
            hi = mid
        else:
            lo = mid
    k = np.arange(hi + 1)
    return np.exp(k * math.log(qt) - qt - gammaln(k + 1))


def uniformization_rate(A: np.ndarray) -> float:
    return float(np.max(np.abs(np.diag(A)))) if A.size else 0.0


def _uniformized(A, v, t, tol, max_terms):
    q = uniformization_rate(A)
    if q == 0:
        return v.copy()
    w = _poisson_weights(q * t, tol, max_terms)
    if w is None:
        return None
    P = A / q
    out = w[0] * v
    cur = v
    for wk in w[1:]:
        cur = cur + P @ cur
        out = out + wk * cur
    return out


def expm_action(A: np.ndarray, v: np.ndarray, t: float = 1.0,
                cfg: Optional[ExpmConfig] = None) -> np.ndarray:
    """exp(tA) v for an intensity-type matrix A."""
    cfg = cfg or ExpmConfig()
    if t < 0:
        raise ValueError("time must be non-negative")
    A = np.asarray(A, dtype=float)
    v = np.asarray(v, dtype=float)
    if t == 0:
        return v.copy()
    method = cfg.method
    if method == "auto":
        method = "uniformization" if uniformization_rate(A) * t <= 1e4 else "pade"
    if method == "uniformization":
        out = _uniformized(A, v, t, cfg.tol, cfg.max_terms)
        if out is not None:
            return out
        warnings.warn("uniformization needs more than max_terms terms; using Pade", RuntimeWarning)
        log.warning("uniformization fell back to Pade (q t = %.3g)", uniformization_rate(A) * t)
    return _pade_action(A, v, t)


def expm_product_action(mats: Sequence[np.ndarray], dts: Sequence[float], v: np.ndarray,
                        cfg: Optional[ExpmConfig] = None) -> np.ndarray:
    """exp(dt_1 A_1) ... exp(dt_n A_n) v, applied right to left."""
    if len(mats) != len(dts):
        raise ValueError("need one time step per matrix")
    out = np.asarray(v, dtype=float)
    for A, dt in zip(reversed(mats), reversed(dts)):
        out = expm_action(A, out, dt, cfg)
    return out
