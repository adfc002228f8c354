"""One-dimensional transition-function propagation and its imaginary-time residual.

A step multiplies ``psi`` by a locally averaged ``exp(-eps f)``::

    psi_new(x_n) = psi(x_n) * sum_m K_nm w_m exp(-eps f(x_m)) psi(x_m)
                              / sum_m K_nm w_m psi(x_m)

where ``K`` is a Gaussian kernel of variance ``eps`` and ``w`` are trapezoid
weights. The denominator is the zero-potential quadrature mass, so ``f == 0``
is the identity and ``f == c`` gives ``exp(-c eps) psi`` exactly. The kernel
window is symmetric in node index and truncated at ``8 sqrt(eps)`` and at the
interval ends, which keeps the step first-order consistent with
``d psi / ds = -f psi`` up to the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import kernels
from .errors import GridMismatch, InvalidInput, NegativePsi, UnboundedF

#: kernel truncation radius in units of sqrt(eps)
WINDOW_SIGMAS = 8.0


@dataclass(frozen=True, eq=False)
class WaveGrid:
    x_nodes: np.ndarray
    psi: np.ndarray
    s: float = 0.0

    def __post_init__(self):
        x = np.array(self.x_nodes, dtype=float)
        psi = np.array(self.psi, dtype=float)
        if x.ndim != 1 or x.size < 3:
            raise InvalidInput("x_nodes must be 1-D with at least 3 nodes")
        if psi.shape != x.shape:
            raise InvalidInput("psi must have one value per node")
        if not np.all(np.isfinite(x)) or np.any(np.diff(x) <= 0):
            raise InvalidInput("x_nodes must be finite and strictly increasing")
        if not np.all(psi > 0):
            raise NegativePsi("psi must be positive at every node")
        x.flags.writeable = False
        psi.flags.writeable = False
        object.__setattr__(self, "x_nodes", x)
        object.__setattr__(self, "psi", psi)

    @classmethod
    def uniform(cls, lo: float, hi: float, n: int, psi=None, s: float = 0.0) -> "WaveGrid":
        x = np.linspace(lo, hi, n)
        if psi is None:
            psi = np.ones(n)
        elif callable(psi):
            psi = psi(x)
        return cls(x, psi, s)


FLike = Union[Callable, float]


def _f_values(f: FLike, x: np.ndarray) -> np.ndarray:
    fx = f(x) if callable(f) else f
    fx = np.broadcast_to(np.asarray(fx, dtype=float), x.shape)
    if not np.all(np.isfinite(fx)):
        raise UnboundedF("f is not finite on the node interval")
    return fx


def transition_step(w: WaveGrid, f: FLike, epsilon: float) -> WaveGrid:
    """Advance ``w`` by ``epsilon`` under potential ``f`` (callable or constant).

    Raises
    ------
    UnboundedF
        ``f`` is non-finite at some node.
    NegativePsi
        The step produced a nonpositive or non-finite value (typically ``eps f``
        so large that ``exp(-eps f)`` underflows).
    """
    if not epsilon > 0:
        raise InvalidInput("epsilon must be > 0")
    fx = _f_values(f, w.x_nodes)
    radius = WINDOW_SIGMAS * np.sqrt(epsilon)
    psi = kernels.local_transition(w.x_nodes, w.psi, fx, epsilon, radius)
    if not np.all(np.isfinite(psi)) or np.any(psi <= 0):
        raise NegativePsi("transition step produced a nonpositive value; refine the grid or eps")
    return WaveGrid(w.x_nodes, psi, w.s + epsilon)


def schrodinger_residual(before: WaveGrid, after: WaveGrid, f: FLike, epsilon: float) -> float:
    """``max_n |(psi_after - psi_before) / eps + f psi_before|``."""
    if before.x_nodes.shape != after.x_nodes.shape or not np.array_equal(before.x_nodes,
                                                                         after.x_nodes):
        raise GridMismatch("wave grids use different nodes")
    fx = _f_values(f, before.x_nodes)
    r = (after.psi - before.psi) / epsilon + fx * before.psi
    return float(np.max(np.abs(r)))


def propagate(w: WaveGrid, f: FLike, epsilon: float, steps: int):
    """Run ``steps`` transition steps; returns ``(final grid, per-step residuals)``."""
    res = np.empty(int(steps))
    for i in range(int(steps)):
        nxt = transition_step(w, f, epsilon)
        res[i] = schrodinger_residual(w, nxt, f, epsilon)
        w = nxt
    return w, res
