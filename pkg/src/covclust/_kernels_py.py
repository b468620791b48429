"""Pure-numpy edge kernels, semantically identical to covclust._edgecore.

Array layout shared by both backends:

  bt    : (d, c)  model weights transposed, row i = column i of B
  z, u  : (2l, c) directed auxiliary / scaled dual variables; row k < l is
          the forward copy (i -> j) of undirected edge k, row l + k the
          backward copy (j -> i)
  tails : (2l,)   0-based covariate owning each directed row
  ei,ej : (l,)    0-based endpoints of the undirected edges, ei < ej

All arrays are float64 / int64 and C-contiguous.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def edge_aggregates(z, u, tails, d):
    """Return (q_all, q_up) for q = z + u.

    q_all is the scalar sum of squared entries of q; q_up is (d, c) with
    row i the sum of q rows whose tail is covariate i.
    """
    q = z + u
    q_all = float(np.einsum("ec,ec->", q, q))
    c = q.shape[1]
    q_up = np.empty((d, c))
    for t in range(c):
        q_up[:, t] = np.bincount(tails, weights=q[:, t], minlength=d)
    return q_all, q_up


def aux_update(bt, u, ei, ej, w, nu, rho, z_out, theta_out):
    """Closed-form minimizer of the per-edge auxiliary subproblem.

    For each undirected edge k with endpoints (i, j), let a = bt[i] -
    u[fwd], b = bt[j] - u[bwd] and h = ||a - b||.  The new pair is the
    convex combination with theta = max(1 - nu*w/(rho*h), 1/2) (1/2 when
    h = 0): z_fwd = theta*a + (1-theta)*b, z_bwd mirrored.  At theta =
    1/2 both rows receive the bit-identical midpoint, which is what marks
    the edge as fused downstream.
    """
    l = ei.shape[0]
    a = bt[ei] - u[:l]
    b = bt[ej] - u[l:]
    diff = a - b
    # Accumulate ||a - b||^2 class by class: vectorized over edges but
    # with the same per-edge addition order as the compiled backend, so
    # h (and hence theta and z) match it bit for bit.
    hsq = np.zeros(l)
    for t in range(diff.shape[1]):
        hsq += diff[:, t] * diff[:, t]
    h = np.sqrt(hsq)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = 1.0 - (nu * w) / (rho * h)
    theta = np.where(h == 0.0, 0.5, np.maximum(raw, 0.5))
    theta_out[:] = theta
    th = theta[:, None]
    z_out[:l] = th * a + (1.0 - th) * b
    z_out[l:] = (1.0 - th) * a + th * b
    fused = theta == 0.5
    if np.any(fused):
        mid = 0.5 * (a[fused] + b[fused])
        z_out[:l][fused] = mid
        z_out[l:][fused] = mid


def dual_update(u, z, bt, tails):
    """In-place scaled dual ascent: u += z - bt[tails]."""
    u += z
    u -= bt[tails]


def primal_residual_sq(z, bt, tails):
    """Sum of squared entries of z - bt[tails] over all directed rows."""
    r = z - bt[tails]
    return float(np.einsum("ec,ec->", r, r))


def diff_sq(z_new, z_old):
    """Sum of squared entries of z_new - z_old."""
    r = z_new - z_old
    return float(np.einsum("ec,ec->", r, r))


def fused_mask(z):
    """Boolean (l,) mask: True where forward and backward rows are
    bitwise equal, the exact-fusion criterion."""
    l = z.shape[0] // 2
    return (z[:l] == z[l:]).all(axis=1)
