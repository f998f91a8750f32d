"""Shooting oracle for the first eigenvalue of the one-dimensional problem.

Integrates the flux-form first-order system for

    -(|u'|^(p-2) u')' = lam |u|^(p-2) u,   u(0) = 0,

from u(0)=0 with unit initial flux at lam=1, locates the first zero x1 of u,
and returns lam1 = x1^p by the scaling u(x) -> u(x1 x).  The flux variable
v = |u'|^(p-2) u' keeps the system smooth away from the single apex where
v crosses zero.

The printed values are frozen into the eigen tests; rerun this script to
regenerate them.  A closed-form cross-check (p-1) * (2 pi / (p sin(pi/p)))^p
is printed alongside.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp


def first_zero_of_shot(p: float) -> float:
    """First zero x1 > 0 of the lam=1 shot starting with unit flux."""
    expo = 1.0 / (p - 1.0)

    def rhs(_x, y):
        u, v = y
        du = np.sign(v) * abs(v) ** expo
        dv = -np.sign(u) * abs(u) ** (p - 1.0)
        return (du, dv)

    def hit_zero(_x, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1.0

    sol = solve_ivp(
        rhs,
        (0.0, 50.0),
        (0.0, 1.0),
        events=hit_zero,
        rtol=1e-12,
        atol=1e-14,
        max_step=0.01,
        dense_output=True,
    )
    if not sol.t_events[0].size:
        raise RuntimeError(f"no zero crossing found for p={p}")
    return float(sol.t_events[0][0])


def lambda1(p: float) -> float:
    return first_zero_of_shot(p) ** p


def closed_form(p: float) -> float:
    q = 2.0 * np.pi / (p * np.sin(np.pi / p))
    return (p - 1.0) * q**p


if __name__ == "__main__":
    for p in (1.5, 2.0, 3.0, 4.0):
        shot = lambda1(p)
        ref = closed_form(p)
        print(f"p={p:3}  lambda1={shot:.12g}  closed_form={ref:.12g}  rel={shot / ref - 1.0:+.3e}")
