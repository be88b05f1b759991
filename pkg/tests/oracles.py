"""Independent reference implementations used to validate the package.

Nothing here imports from splineseg's numerics beyond plain array
handling; each oracle recomputes its answer from first principles so
library results can be checked against a second, dissimilar route.
"""

from __future__ import annotations

import numpy as np


# -- exact polyline self-intersection ---------------------------------------

def polyline_self_intersects(points: np.ndarray) -> bool:
    """True when any two non-adjacent edges of an open polyline cross.

    Uses orientation predicates; only proper crossings count (shared
    endpoints of consecutive edges do not). Vectorized over all pairs.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts) - 1
    if n < 3:
        return False
    a = pts[:-1]
    b = pts[1:]

    def cross(o, p, q):
        return ((p[..., 0] - o[..., 0]) * (q[..., 1] - o[..., 1])
                - (p[..., 1] - o[..., 1]) * (q[..., 0] - o[..., 0]))

    ai = a[:, None, :]
    bi = b[:, None, :]
    aj = a[None, :, :]
    bj = b[None, :, :]
    d1 = cross(ai, bi, aj)
    d2 = cross(ai, bi, bj)
    d3 = cross(aj, bj, ai)
    d4 = cross(aj, bj, bi)
    proper = (d1 * d2 < 0) & (d3 * d4 < 0)
    i_idx, j_idx = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    nonadjacent = j_idx > i_idx + 1
    return bool(np.any(proper & nonadjacent))


# -- brute-force median filter ----------------------------------------------

def median_filter_reference(img: np.ndarray, kw: int, kh: int) -> np.ndarray:
    """Pixel-by-pixel median with replicate padding.

    Window anchor matches the library contract: the output pixel sits at
    offset ceil(k/2)-1 inside the window.
    """
    img = np.asarray(img, dtype=float)
    h, w = img.shape
    top = (kh + 1) // 2 - 1
    left = (kw + 1) // 2 - 1
    out = np.empty_like(img)
    for r in range(h):
        for c in range(w):
            vals = []
            for dr in range(kh):
                for dc in range(kw):
                    rr = min(max(r - top + dr, 0), h - 1)
                    cc = min(max(c - left + dc, 0), w - 1)
                    vals.append(img[rr, cc])
            out[r, c] = np.median(vals)
    return out


# -- characteristic-polynomial eigensolver ----------------------------------

def charpoly_coeffs(a: np.ndarray) -> np.ndarray:
    """Coefficients of det(tI - A), highest power first (Faddeev-LeVerrier)."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    coeffs = [1.0]
    m = np.zeros_like(a)
    c = 1.0
    for k in range(1, n + 1):
        m = a @ m + c * np.eye(n)
        c = -np.trace(a @ m) / k
        coeffs.append(c)
    return np.asarray(coeffs)


def _bisect_root(coeffs, lo, hi, iters=200):
    flo = np.polyval(coeffs, lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fmid = np.polyval(coeffs, mid)
        if fmid == 0.0:
            return mid
        if (flo < 0) == (fmid < 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def eig_oracle(a: np.ndarray, zero_tol: float = 1e-9) -> np.ndarray:
    """Eigenvalues of a symmetric PSD matrix, descending.

    Builds the characteristic polynomial, strips the zero-root factor
    (trailing coefficients below zero_tol relative to the largest), then
    isolates each remaining root by sign changes on a dense grid inside
    the Gershgorin bound and refines by bisection. Needs the nonzero
    eigenvalues to be distinct, which random-data covariances satisfy.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    coeffs = charpoly_coeffs(a)
    scale = np.abs(coeffs).max()
    zeros = 0
    while zeros < n and abs(coeffs[n - zeros]) <= zero_tol * scale:
        zeros += 1
    poly = coeffs[: n - zeros + 1]
    deg = len(poly) - 1
    if deg == 0:
        return np.zeros(n)
    radius = float(np.max(np.sum(np.abs(a), axis=1))) + 1.0
    grid = np.linspace(0.0, radius, 200001)
    vals = np.polyval(poly, grid)
    sign = np.sign(vals)
    sign[sign == 0] = 1
    flips = np.flatnonzero(sign[:-1] != sign[1:])
    roots = [_bisect_root(poly, grid[i], grid[i + 1]) for i in flips]
    if len(roots) != deg:
        raise ArithmeticError(
            f"isolated {len(roots)} roots, expected {deg}; "
            "eigenvalues may be clustered"
        )
    out = np.concatenate([np.sort(roots)[::-1], np.zeros(zeros)])
    return out


# -- overlap by direct counting ---------------------------------------------

def overlap_reference(pred: np.ndarray, truth: np.ndarray):
    """Pixel-by-pixel counting; returns (tp, fp, fn, theta)."""
    pred = np.asarray(pred).astype(bool).ravel()
    truth = np.asarray(truth).astype(bool).ravel()
    tp = fp = fn = 0
    for p, t in zip(pred, truth):
        if p and t:
            tp += 1
        elif p:
            fp += 1
        elif t:
            fn += 1
    theta = 1.0 if tp + fp + fn == 0 else tp / (tp + fp + fn)
    return tp, fp, fn, theta
