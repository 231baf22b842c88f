"""Pure numpy implementations of the hot kernels.

These are the reference versions; ``_kernels_cy`` compiles the same loops.
Both take float64 C-contiguous arrays and perform no argument validation.
"""
import numpy as np


def find_spans(knots, order, points):
    """Knot-span index ``i`` with ``knots[i] <= x < knots[i + 1]`` per point.

    The right domain endpoint is assigned to the last nonempty span.
    """
    n_basis = len(knots) - order
    spans = np.searchsorted(knots, points, side="right") - 1
    return np.clip(spans, order - 1, n_basis - 1)


def bspline_basis(knots, order, points):
    """Evaluate every B-spline of the given order at ``points``.

    Returns a ``(len(points), len(knots) - order)`` matrix. Only the
    ``order`` functions supported on each point's span are computed, with
    the triangular Cox-de Boor scheme vectorised across points.
    """
    knots = np.asarray(knots, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64)
    n_basis = len(knots) - order
    degree = order - 1
    spans = find_spans(knots, order, points)

    n_pts = len(points)
    vals = np.zeros((n_pts, order))
    vals[:, 0] = 1.0
    left = np.zeros((n_pts, order))
    right = np.zeros((n_pts, order))
    for j in range(1, order):
        left[:, j] = points - knots[spans + 1 - j]
        right[:, j] = knots[spans + j] - points
        saved = np.zeros(n_pts)
        for r in range(j):
            temp = vals[:, r] / (right[:, r + 1] + left[:, j - r])
            vals[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        vals[:, j] = saved

    out = np.zeros((n_pts, n_basis))
    cols = spans[:, None] - degree + np.arange(order)[None, :]
    np.put_along_axis(out, cols, vals, axis=1)
    return out


def nipals_weights(Z, Y, tol, max_iter):
    """Dominant X-weight vector by the NIPALS power iteration.

    Starts from the Y column with the largest sum of squares and iterates
    ``w = Z'u/|Z'u|, t = Zw, c = Y't/t't, u = Yc/c'c`` until the weight
    vector moves by less than ``tol``. Returns ``(w, n_iter)``; ``w`` is all
    zeros when ``Z'u`` vanishes.
    """
    p = Z.shape[1]
    u = Y[:, int(np.argmax((Y * Y).sum(axis=0)))].copy()
    w = np.zeros(p)
    w_old = np.zeros(p)
    it = 0
    while it < max_iter:
        it += 1
        w = Z.T @ u
        norm = np.sqrt(w @ w)
        if norm <= 0.0:
            w = np.zeros(p)
            break
        w /= norm
        t = Z @ w
        c = (Y.T @ t) / (t @ t)
        u = (Y @ c) / (c @ c)
        if np.sqrt(((w - w_old) ** 2).sum()) < tol:
            break
        w_old = w
    return w, it
