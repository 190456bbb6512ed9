"""Per-frequency Littlewood-Paley budgets of a filter bank.

Both vectors are indexed by Fourier column. For a column ``i`` with twin
``c = conj_of[i]``::

    gamma[i]  = sum_k |W_k[i]|^2 + |W_k[c]|^2
    lambda[i] = 2 - |A[i]|^2 - |A[c]|^2

The constant column is its own twin, which yields the doubled form there.
``gamma <= lambda`` everywhere is equivalent to ``|Wx|^2 + |Ax|^2 <= |x|^2``
for every real ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FEAS_TOL = 1e-9
ZERO_BUDGET = 1e-14
# a rescaled group may land a few ulps above its budget; leaving it alone
# keeps the projection exactly idempotent
_ULP_SLACK = 8 * np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class ConstraintBudgets:
    gamma: np.ndarray
    lam: np.ndarray
    scale: np.ndarray

    @property
    def violation(self) -> float:
        return float(max(0.0, np.max(self.gamma - self.lam)))


def constraint_budgets(spectra: np.ndarray, avg_magnitudes: np.ndarray,
                       conj_of: np.ndarray) -> ConstraintBudgets:
    power = np.sum(np.abs(spectra) ** 2, axis=0)
    gamma = power + power[conj_of]
    a2 = np.asarray(avg_magnitudes) ** 2
    lam = np.clip(2.0 - a2 - a2[conj_of], 0.0, 2.0)
    scale = np.ones_like(gamma)
    over = gamma > lam * (1 + _ULP_SLACK)
    scale[over] = np.sqrt(lam[over] / gamma[over])
    return ConstraintBudgets(gamma, lam, scale)


def tightness(b: ConstraintBudgets) -> float:
    """``1 - min usage`` over frequencies with a positive budget."""
    live = b.lam > ZERO_BUDGET
    if not np.any(live):
        return 0.0
    usage = np.min(b.gamma[live] / b.lam[live])
    return float(np.clip(1.0 - usage, 0.0, 1.0))
