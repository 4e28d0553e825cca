"""Weighted-sum-rate power allocation by multilevel water-filling.

Each device receives p_k = [w_k / lam - g_k]^+ where w_k is its weight
(the transmission distance for transport-capacity maximization, 1 for plain
sum-rate), g_k its effective inverse channel gain sigma^2/|h_k|^2, and the
water-level dual lam is chosen so the budget is met with equality.
"""

from __future__ import annotations

import numpy as np


class WaterfillError(ValueError):
    """Invalid water-filling input."""


def waterfill(weights, inverse_gains, p_total: float, rel_tol: float = 1e-10) -> np.ndarray:
    """Powers (W) maximizing sum_k w_k log2(1 + p_k / g_k) s.t. sum p = p_total.

    `inverse_gains` may contain +inf for channels killed by absorption;
    those devices get exactly zero power. The dual is bisected to `rel_tol`
    and then polished with the exact closed form on the active set.
    """
    w = np.asarray(weights, dtype=float)
    g = np.asarray(inverse_gains, dtype=float)
    if w.shape != g.shape or w.ndim != 1:
        raise WaterfillError("weights and inverse_gains must be matching 1-D arrays")
    if np.any(w <= 0) or np.any(g <= 0):
        raise WaterfillError("weights and inverse gains must be > 0")
    if not p_total > 0:
        raise WaterfillError("p_total must be > 0")

    usable = np.isfinite(g)
    if not usable.any():
        raise WaterfillError("every channel has zero gain; no feasible allocation")
    wu, gu = w[usable], g[usable]

    def powers(lam: float) -> np.ndarray:
        return np.maximum(0.0, wu / lam - gu)

    # Budget residual is strictly decreasing in lam on this bracket.
    lo = np.min(wu / (gu + p_total))
    hi = np.max(wu / gu)
    for _ in range(200):
        lam = 0.5 * (lo + hi)
        if powers(lam).sum() > p_total:
            lo = lam
        else:
            hi = lam
        if hi - lo <= rel_tol * hi:
            break
    lam = 0.5 * (lo + hi)

    # Exact water level for the active set found by bisection.
    active = wu / lam - gu > 0
    if not active.any():
        active[np.argmax(wu / gu)] = True
    lam = wu[active].sum() / (p_total + gu[active].sum())
    p_u = powers(lam)
    p_u *= p_total / p_u.sum()

    p = np.zeros_like(w)
    p[usable] = p_u
    return p
