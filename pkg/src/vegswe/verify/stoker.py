"""Classical dam-break similarity solution over a flat frictionless bed."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class RootNotFoundError(RuntimeError):
    pass


@dataclass(frozen=True)
class StarState:
    h: float
    u: float
    shock_speed: float  # inf-free; equals the wet front speed on a dry bed


def _shock_velocity(h, h_right, g):
    """Velocity behind a shock moving into still water of depth h_right."""
    return (h - h_right) * math.sqrt(0.5 * g * (h + h_right) / (h * h_right))


def star_state(h_left: float, h_right: float, g: float = 9.81, tol: float = 1e-12) -> StarState:
    """Intermediate state by bisection on rarefaction/shock matching."""
    if not (h_left > h_right >= 0):
        raise ValueError("need h_left > h_right >= 0")
    c_left = math.sqrt(g * h_left)
    if h_right == 0.0:
        return StarState(0.0, 2.0 * c_left, 2.0 * c_left)

    def mismatch(h):
        return 2.0 * (c_left - math.sqrt(g * h)) - _shock_velocity(h, h_right, g)

    lo, hi = h_right, h_left  # mismatch(lo) > 0 > mismatch(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mismatch(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * h_left:
            break
    else:
        raise RootNotFoundError("bisection did not converge")
    h = 0.5 * (lo + hi)
    u = 2.0 * (c_left - math.sqrt(g * h))
    return StarState(h, u, h * u / (h - h_right))


def stoker_reference(h_left: float, h_right: float, g: float, t: float, x, x0: float = 0.0):
    """Depth and velocity profiles at time ``t`` for a dam at ``x0``.

    Returns ``(h, u)`` arrays shaped like ``x``. Equal depths give the
    undisturbed still state.
    """
    x = np.asarray(x, dtype=float)
    if h_left == h_right:
        return np.full_like(x, float(h_left)), np.zeros_like(x)
    if t <= 0:
        return np.where(x < x0, h_left, h_right).astype(float), np.zeros_like(x)
    star = star_state(h_left, h_right, g)
    c_left = math.sqrt(g * h_left)
    xi = (x - x0) / t
    h = np.empty_like(x)
    u = np.empty_like(x)
    tail = star.u - math.sqrt(g * star.h)
    left = xi <= -c_left
    fan = (xi > -c_left) & (xi <= tail)
    middle = (xi > tail) & (xi <= star.shock_speed)
    right = xi > star.shock_speed
    h[left], u[left] = h_left, 0.0
    h[fan] = (2.0 * c_left - xi[fan]) ** 2 / (9.0 * g)
    u[fan] = 2.0 / 3.0 * (c_left + xi[fan])
    h[middle], u[middle] = star.h, star.u
    h[right], u[right] = h_right, 0.0
    return h, u
