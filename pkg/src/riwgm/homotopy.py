"""Exact lasso solution paths by homotopy (LARS with the lasso modification).

Works in Gram form on the objective

    ||y - Z g||^2 + delta * ||g||_1  =  g'G g - 2 c'g + delta ||g||_1 + const,

with ``G = Z'Z`` positive definite and ``c = Z'y``. Penalties are reported in
``delta`` units.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LassoPath", "lasso_path_gram"]


@dataclass
class LassoPath:
    """Piecewise-linear solution path.

    ``knots`` decrease strictly to 0; ``coefs[i]`` is the solution at
    ``knots[i]``; ``active[i]`` is the active set on the open segment
    ``(knots[i+1], knots[i])``.
    """

    knots: np.ndarray
    coefs: np.ndarray
    active: list

    @property
    def terminal(self) -> float:
        """Smallest penalty at which the solution is identically zero."""
        return float(self.knots[0])

    @property
    def full_knot(self) -> float:
        """Largest penalty below which every variable stays active."""
        m = self.coefs.shape[1]
        for i in range(len(self.active) - 1, -1, -1):
            if len(self.active[i]) < m:
                return float(self.knots[i + 1])
        return float(self.knots[0])

    def coef_at(self, delta: float) -> np.ndarray:
        if delta >= self.knots[0]:
            return np.zeros(self.coefs.shape[1])
        if delta <= 0:
            return self.coefs[-1].copy()
        i = np.searchsorted(-self.knots, -delta, side="right") - 1
        hi, lo = self.knots[i], self.knots[i + 1]
        w = (hi - delta) / (hi - lo)
        return (1.0 - w) * self.coefs[i] + w * self.coefs[i + 1]

    def support_at(self, delta: float) -> np.ndarray:
        m = self.coefs.shape[1]
        out = np.zeros(m, dtype=bool)
        if delta >= self.knots[0]:
            return out
        exact = np.flatnonzero(self.knots == delta)
        if exact.size:
            out[self.coefs[exact[0]] != 0] = True
            return out
        i = np.searchsorted(-self.knots, -delta, side="right") - 1
        out[self.active[i]] = True
        return out


def lasso_path_gram(gram: np.ndarray, corr: np.ndarray, max_steps: int | None = None) -> LassoPath:
    """Full lasso homotopy path from the empty model down to ``delta = 0``.

    Simultaneous events are resolved one at a time, lowest variable index
    first.
    """
    gram = np.asarray(gram, dtype=float)
    c = np.asarray(corr, dtype=float)
    m = c.size
    if m == 0:
        return LassoPath(np.array([0.0]), np.zeros((1, 0)), [])
    mu = float(np.max(np.abs(c)))
    if mu == 0.0:
        return LassoPath(np.array([0.0]), np.zeros((1, m)), [])
    tol = 1e-12 * mu
    max_steps = max_steps or 20 * m + 20

    coef = np.zeros(m)
    active: list[int] = []
    inactive = np.ones(m, dtype=bool)
    knots = [mu]
    coefs = [coef.copy()]
    segments = []

    j0 = int(np.flatnonzero(np.abs(c) >= mu - tol)[0])
    active.append(j0)
    inactive[j0] = False
    just_dropped = -1

    for _ in range(max_steps):
        a_idx = np.array(active)
        resid = c - gram @ coef
        signs = np.sign(resid[a_idx])
        direction = np.linalg.solve(gram[np.ix_(a_idx, a_idx)], signs)
        a = gram[:, a_idx] @ direction

        step, event, who = mu, "end", -1
        with np.errstate(divide="ignore", invalid="ignore"):
            t_up = np.where(1.0 - a > 1e-14, (mu - resid) / (1.0 - a), np.inf)
            t_dn = np.where(1.0 + a > 1e-14, (mu + resid) / (1.0 + a), np.inf)
        t_up[t_up <= -tol] = np.inf
        t_dn[t_dn <= -tol] = np.inf
        t_in = np.minimum(t_up, t_dn)
        t_in[~inactive] = np.inf
        if just_dropped >= 0 and t_in[just_dropped] <= 1e-9 * mu:
            t_in[just_dropped] = np.inf
        t_out = np.full(m, np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            t_act = np.where(direction != 0, -coef[a_idx] / direction, np.inf)
        t_out[a_idx] = np.where(t_act > tol, t_act, np.inf)

        t_min = min(t_in.min(), t_out.min())
        if t_min < mu - tol:
            tied = np.flatnonzero((t_in <= t_min + tol) | (t_out <= t_min + tol))
            who = int(tied[0])
            event = "enter" if t_in[who] <= t_min + tol else "drop"
            step = max(float(min(t_in[who], t_out[who])), 0.0)

        coef[a_idx] += step * direction
        mu -= step
        segments.append(sorted(active))
        if event == "end" or mu <= tol:
            knots.append(0.0)
            coefs.append(coef.copy())
            break
        if event == "enter":
            active.append(who)
            inactive[who] = False
            just_dropped = -1
        else:
            coef[who] = 0.0
            active.remove(who)
            inactive[who] = True
            just_dropped = who
        if step > 0:
            knots.append(mu)
            coefs.append(coef.copy())
        else:
            # zero-length step: the previous knot absorbs the event
            coefs[-1] = coef.copy()
            segments.pop()
    else:
        raise RuntimeError("lasso homotopy did not terminate")

    knots = 2.0 * np.array(knots)
    return LassoPath(knots, np.array(coefs), segments)
