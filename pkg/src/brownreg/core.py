"""Domain types: time grids, panels, penalty specifications and fitted paths."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidSpec, MissingCase, NonFiniteValue, RaggedJ, InvalidInput


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing time points in ``[0, T]``; non-uniform spacing allowed."""

    points: np.ndarray

    def __post_init__(self):
        pts = _frozen(self.points)
        if pts.ndim != 1 or pts.size < 2:
            raise InvalidInput("time grid needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise NonFiniteValue("time grid contains non-finite values")
        if pts[0] < 0:
            raise InvalidInput("time grid must start at s >= 0")
        if np.any(np.diff(pts) <= 0):
            raise InvalidInput("time grid must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, t_max: float, n: int, t_min: float = 0.0) -> "TimeGrid":
        return cls(np.linspace(t_min, t_max, n))

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.points)

    def __len__(self):
        return self.points.size

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())


@dataclass(frozen=True, eq=False)
class Panel:
    """Balanced panel: ``Y[t, i]`` responses and ``X[t, i, j]`` covariates on a grid."""

    grid: TimeGrid
    Y: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        Y = _frozen(self.Y)
        X = _frozen(self.X)
        T = len(self.grid)
        if Y.ndim != 2 or Y.shape[0] != T:
            raise InvalidInput(f"Y must have shape (n_times={T}, N), got {Y.shape}")
        if X.ndim != 3 or X.shape[:2] != Y.shape:
            raise InvalidInput(f"X must have shape {Y.shape + ('J',)}, got {X.shape}")
        if Y.shape[1] < 1 or X.shape[2] < 1:
            raise InvalidInput("panel needs N >= 1 and J >= 1")
        if not (np.all(np.isfinite(Y)) and np.all(np.isfinite(X))):
            raise NonFiniteValue("panel contains non-finite values")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "X", X)

    @property
    def N(self) -> int:
        return self.Y.shape[1]

    @property
    def J(self) -> int:
        return self.X.shape[2]

    def __eq__(self, other):
        return (isinstance(other, Panel) and self.grid == other.grid
                and np.array_equal(self.Y, other.Y) and np.array_equal(self.X, other.X))

    def rows(self):
        """Yield ``(t, i, y, x_1, ..., x_J)`` rows sorted by ``(t, i)``; ``i`` is 1-based."""
        for ti, t in enumerate(self.grid.points):
            for i in range(self.N):
                yield (float(t), i + 1, float(self.Y[ti, i]), *map(float, self.X[ti, i]))


def validate_panel(rows: Iterable[Sequence[float]]) -> Panel:
    """Build a :class:`Panel` from ``(t, i, y, x_1..x_J)`` rows in any order.

    Case indices must be dense ``1..N`` at every time point.
    """
    rows = [tuple(r) for r in rows]
    if not rows:
        raise InvalidInput("no rows")
    width = len(rows[0])
    if width < 4:
        raise RaggedJ("rows need t, i, y and at least one covariate")
    by_time: dict[float, dict[int, tuple]] = {}
    for r in rows:
        if len(r) != width:
            raise RaggedJ(f"row {r[:2]} has {len(r) - 3} covariates, expected {width - 3}")
        vals = [float(v) for v in r]
        if not all(math.isfinite(v) for v in vals):
            raise NonFiniteValue(f"non-finite value in row at t={r[0]}, i={r[1]}")
        t, i = vals[0], vals[1]
        if i != int(i) or i < 1:
            raise InvalidInput(f"case index must be a positive integer, got {r[1]}")
        cases = by_time.setdefault(t, {})
        if int(i) in cases:
            raise InvalidInput(f"duplicate row for t={t}, i={int(i)}")
        cases[int(i)] = vals
    times = sorted(by_time)
    N = max(max(c) for c in by_time.values())
    J = width - 3
    Y = np.empty((len(times), N))
    X = np.empty((len(times), N, J))
    for ti, t in enumerate(times):
        cases = by_time[t]
        for i in range(1, N + 1):
            if i not in cases:
                raise MissingCase(f"case i={i} missing at t={t}")
            vals = cases[i]
            Y[ti, i - 1] = vals[2]
            X[ti, i - 1] = vals[3:]
    return Panel(TimeGrid(times), Y, X)


class BasisKind(enum.Enum):
    IDENTITY = "identity"
    CUBIC = "cubic"

    @classmethod
    def parse(cls, value) -> "BasisKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidSpec("basis", f"unknown basis {value!r}") from None


class Family(enum.Enum):
    LASSO = "lasso"
    RIDGE = "ridge"
    LPNORM = "lpnorm"
    ELASTICNET = "elasticnet"
    FUSEDLASSO = "fusedlasso"
    BRIDGE = "bridge"
    GROUPLASSO = "grouplasso"
    SPLINE = "spline"

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "").replace("-", "")
        aliases = {"lp": "lpnorm", "enet": "elasticnet", "fused": "fusedlasso",
                   "group": "grouplasso", "splinecubic": "spline", "cubicspline": "spline"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise InvalidSpec("penalty", f"unknown penalty family {value!r}") from None


#: families whose drift contains absolute values, so the FOC has a sign branch
BRANCHED = frozenset({Family.LASSO, Family.LPNORM, Family.ELASTICNET,
                      Family.FUSEDLASSO, Family.BRIDGE})
#: families whose drift couples coordinates (non-separable)
COUPLED = frozenset({Family.LPNORM, Family.FUSEDLASSO, Family.BRIDGE})


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty family plus hyperparameters.

    Parameters
    ----------
    family : Family or str
    lambda_star : float
        Scale of the penalization function ``g(s, x) = lambda_star * exp(s x)``.
    alpha : float, optional
        Mixing weight for elastic net (``[0, 1]``) and fused lasso (``(0, 1)``).
    p : float, optional
        Exponent of the Lp-norm family, ``p != 0``.
    group_size : int
        Block size ``m`` for group lasso; ``J`` must be a multiple of it.
    K : sequence of (m, m) arrays, optional
        Group lasso quadratic forms, one per block. Identity when omitted.
    """

    family: Family
    lambda_star: float = 0.0
    alpha: Optional[float] = None
    p: Optional[float] = None
    group_size: int = 1
    K: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        fam = Family.parse(self.family)
        object.__setattr__(self, "family", fam)
        lam = float(self.lambda_star)
        if not math.isfinite(lam) or lam < 0:
            raise InvalidSpec("lambda", f"lambda_star must be finite and >= 0, got {self.lambda_star}")
        object.__setattr__(self, "lambda_star", lam)
        if fam is Family.ELASTICNET:
            a = 0.5 if self.alpha is None else float(self.alpha)
            if not 0.0 <= a <= 1.0:
                raise InvalidSpec("alpha", f"elastic net alpha must lie in [0, 1], got {self.alpha}")
            object.__setattr__(self, "alpha", a)
        elif fam is Family.FUSEDLASSO:
            a = 0.5 if self.alpha is None else float(self.alpha)
            if not 0.0 < a < 1.0:
                raise InvalidSpec("alpha", f"fused lasso alpha must lie in (0, 1), got {self.alpha}")
            object.__setattr__(self, "alpha", a)
        if fam is Family.LPNORM:
            p = 1.0 if self.p is None else float(self.p)
            if p == 0 or not math.isfinite(p):
                raise InvalidSpec("p", f"Lp exponent must be finite and nonzero, got {self.p}")
            object.__setattr__(self, "p", p)
        m = int(self.group_size)
        if m < 1:
            raise InvalidSpec("group_size", "group size must be >= 1")
        object.__setattr__(self, "group_size", m)
        if self.K is not None:
            if fam is not Family.GROUPLASSO:
                raise InvalidSpec("K", "K matrices only apply to group lasso")
            Ks = []
            for b, Kb in enumerate(self.K):
                Kb = _frozen(np.atleast_2d(Kb))
                if Kb.shape != (m, m):
                    raise InvalidSpec("K", f"K[{b}] must be {m}x{m}, got {Kb.shape}")
                if not np.allclose(Kb, Kb.T, rtol=0, atol=1e-12 * (1 + np.abs(Kb).max())):
                    raise InvalidSpec("K", f"K[{b}] is not symmetric")
                try:
                    np.linalg.cholesky(Kb)
                except np.linalg.LinAlgError:
                    raise InvalidSpec("K", f"K[{b}] is not positive definite") from None
                Ks.append(Kb)
            object.__setattr__(self, "K", tuple(Ks))

    def group_matrices(self, J: int) -> list[np.ndarray]:
        """Per-block K matrices for ``J`` coordinates (identity by default)."""
        m = self.group_size
        if J % m:
            raise InvalidSpec("group_size", f"J={J} is not a multiple of group size {m}")
        n_blocks = J // m
        if self.K is None:
            return [np.eye(m) for _ in range(n_blocks)]
        if len(self.K) != n_blocks:
            raise InvalidSpec("K", f"expected {n_blocks} K matrices, got {len(self.K)}")
        return list(self.K)

    @property
    def branched(self) -> bool:
        return self.family in BRANCHED


@dataclass(frozen=True, eq=False)
class CoefPath:
    """Fitted ``beta(s)`` over a grid with per-point diagnostics."""

    grid: TimeGrid
    betas: np.ndarray
    foc_residual_norm: np.ndarray = None
    iterations: np.ndarray = None
    branch_signs: np.ndarray = None
    converged: np.ndarray = None
    messages: tuple = ()

    def __post_init__(self):
        betas = _frozen(np.atleast_2d(self.betas))
        T = len(self.grid)
        if betas.shape[0] != T:
            raise InvalidInput(f"betas must have one row per grid point ({T}), got {betas.shape}")
        object.__setattr__(self, "betas", betas)
        defaults = {
            "foc_residual_norm": (np.zeros(T), float),
            "iterations": (np.zeros(T, dtype=int), int),
            "branch_signs": (np.where(betas < 0, -1, 1), int),
            "converged": (np.ones(T, dtype=bool), bool),
        }
        for name, (default, dtype) in defaults.items():
            val = getattr(self, name)
            object.__setattr__(self, name, _frozen(default if val is None else val, dtype))
        if not self.messages:
            object.__setattr__(self, "messages", ("",) * T)

    @classmethod
    def constant(cls, grid: TimeGrid, beta) -> "CoefPath":
        beta = np.asarray(beta, dtype=float)
        return cls(grid, np.tile(beta, (len(grid), 1)))

    @property
    def J(self) -> int:
        return self.betas.shape[1]

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))
