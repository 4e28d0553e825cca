"""One-to-one subwindow assignment maximizing a total payoff.

`hungarian_assign` is the production path (Hungarian method, O(K^3), via
scipy's linear_sum_assignment on the max-entry-minus-payoff cost matrix);
`exhaustive_assign` enumerates every injection of devices into subwindows
and serves as the optimality oracle for small instances.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linear_sum_assignment

#: Default cap on the number of injections exhaustive_assign may enumerate.
ENUM_CAP = 10_000_000


class AssignmentError(ValueError):
    """The payoff matrix cannot be assigned (shape or value problem)."""


class EnumerationCapError(RuntimeError):
    """Exhaustive enumeration would exceed the configured cap."""


def _check_payoff(payoff) -> np.ndarray:
    payoff = np.asarray(payoff, dtype=float)
    if payoff.ndim != 2:
        raise AssignmentError("payoff matrix must be 2-D (devices x subwindows)")
    n_dev, n_sub = payoff.shape
    if n_dev > n_sub:
        raise AssignmentError(f"more devices ({n_dev}) than subwindows ({n_sub})")
    if not np.all(np.isfinite(payoff)):
        raise AssignmentError("payoff matrix contains NaN/inf entries")
    return payoff


def assignment_payoff(payoff, n_of_k) -> float:
    """Total payoff of an assignment (device k -> subwindow n_of_k[k])."""
    payoff = np.asarray(payoff, dtype=float)
    n_of_k = np.asarray(n_of_k)
    return float(payoff[np.arange(len(n_of_k)), n_of_k].sum())


def check_assignment(n_of_k, n_subwindows: int) -> None:
    """Raise unless the assignment is total and injective."""
    n_of_k = np.asarray(n_of_k)
    if np.any(n_of_k < 0) or np.any(n_of_k >= n_subwindows):
        raise AssignmentError("subwindow index out of range")
    if len(np.unique(n_of_k)) != len(n_of_k):
        raise AssignmentError("a subwindow is assigned to more than one device")


def hungarian_assign(payoff) -> np.ndarray:
    """Assignment maximizing the total payoff, one subwindow per device.

    Returns an int array `n_of_k` of length K. Rectangular K < N matrices
    are handled directly (unassigned subwindows are simply unused).
    """
    payoff = _check_payoff(payoff)
    cost = payoff.max() - payoff
    rows, cols = linear_sum_assignment(cost)
    n_of_k = np.empty(payoff.shape[0], dtype=int)
    n_of_k[rows] = cols
    check_assignment(n_of_k, payoff.shape[1])
    return n_of_k


def exhaustive_assign(payoff, cap: int = ENUM_CAP) -> np.ndarray:
    """Globally optimal assignment by enumerating all N!/(N-K)! injections.

    Ties are broken toward the lexicographically smallest assignment tuple.
    """
    payoff = _check_payoff(payoff)
    n_dev, n_sub = payoff.shape
    count = math.perm(n_sub, n_dev)
    if count > cap:
        raise EnumerationCapError(f"{count} injections exceed the cap of {cap}")
    best_total = -np.inf
    best = None
    dev_idx = np.arange(n_dev)
    for perm in itertools.permutations(range(n_sub), n_dev):
        total = payoff[dev_idx, perm].sum()
        if total > best_total:
            best_total = total
            best = perm
    n_of_k = np.array(best, dtype=int)
    check_assignment(n_of_k, n_sub)
    return n_of_k
