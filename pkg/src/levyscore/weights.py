"""Integration-by-parts weights built from the terminal variation stack.

Each weight is an explicit rational function of the terminal stack; paths
whose first variation is below `dx_floor` are flagged invalid and must be
dropped by downstream estimators (never regularised silently -- the
optional shifted weight `xi_shifted` exists for bias studies only).

    xi   = delta1/DX + D2X/DX^2
    xi1  = dThX*delta1/DX + dThX*D2X/DX^2 - dDThX/DX
    xi2  = (delta1^2 - Ddelta1)/DX^2 + (3*delta1*D2X - D3X)/DX^3
             + 3*D2X^2/DX^4

xi pairs with an indicator of the terminal value, xi1 with a kernel at
the terminal value (score), and xi2 with the hinge (x - y)_+ for the
second density representation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["WeightSet", "compute_weights", "xi_weight", "xi1_weight", "xi2_weight",
           "DX_FLOOR"]

DX_FLOOR = 1e-12


def xi_weight(delta1, dx, d2x):
    dx = np.asarray(dx, dtype=float)
    return delta1 / dx + d2x / dx ** 2


def xi1_weight(delta1, dx, d2x, dth_x, d_dth_x):
    dx = np.asarray(dx, dtype=float)
    return dth_x * delta1 / dx + dth_x * d2x / dx ** 2 - d_dth_x / dx


def xi2_weight(delta1, d_delta1, dx, d2x, d3x):
    dx = np.asarray(dx, dtype=float)
    return ((delta1 ** 2 - d_delta1) / dx ** 2
            + (3.0 * delta1 * d2x - d3x) / dx ** 3
            + 3.0 * d2x ** 2 / dx ** 4)


def xi_shifted(delta1, dx, d2x, shift):
    """Shifted-denominator variant of xi (bias-study tool, not an estimator)."""
    if shift <= 0:
        raise ValueError("shift must be positive")
    d = np.asarray(dx, dtype=float) + shift
    return delta1 / d + d2x / d ** 2


@dataclass
class WeightSet:
    """Terminal values, validity mask, and whichever weights the stack
    supported.  Invalid entries of the weight arrays are NaN."""

    x: np.ndarray
    valid: np.ndarray
    dx_floor: float
    xi: np.ndarray | None = None
    xi1: np.ndarray | None = None
    xi2: np.ndarray | None = None

    @property
    def n_total(self) -> int:
        return int(self.valid.size)

    @property
    def n_dropped(self) -> int:
        return int(np.count_nonzero(~self.valid))

    @property
    def drop_rate(self) -> float:
        return self.n_dropped / max(self.n_total, 1)


def compute_weights(terminal: dict, dx_floor: float = DX_FLOOR) -> WeightSet:
    """Build a WeightSet from a solve_batch terminal dictionary.

    Requires at least the density stack (x, dx, d2x, delta1); computes
    xi1/xi2 too when the full stack is present.
    """
    if dx_floor <= 0:
        raise ValueError("dx_floor must be positive")
    for key in ("x", "dx", "d2x", "delta1", "ok"):
        if key not in terminal:
            raise ValueError(f"terminal dict lacks {key!r}; solve with stack='density' or 'full'")
    dx = np.asarray(terminal["dx"], dtype=float)
    valid = np.asarray(terminal["ok"], dtype=bool) & (dx > dx_floor)
    d1, d2x = terminal["delta1"], terminal["d2x"]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        xi = np.where(valid, xi_weight(d1, dx, d2x), np.nan)
        xi1 = xi2 = None
        if "dth_x" in terminal and "d_dth_x" in terminal:
            xi1 = np.where(valid, xi1_weight(d1, dx, d2x, terminal["dth_x"],
                                             terminal["d_dth_x"]), np.nan)
        if "d3x" in terminal and "d_delta1" in terminal:
            xi2 = np.where(valid, xi2_weight(d1, terminal["d_delta1"], dx, d2x,
                                             terminal["d3x"]), np.nan)
    return WeightSet(x=np.asarray(terminal["x"], dtype=float), valid=valid,
                     dx_floor=float(dx_floor), xi=xi, xi1=xi1, xi2=xi2)
