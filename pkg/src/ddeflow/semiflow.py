"""Phase-space segments and the method-of-steps integrator.

State of the delay equation is a function on [-1, 0] sampled on a uniform
grid of n+1 nodes, h = 1/n, so the delayed time t-1 always lands exactly on
a stored node.  One step of the integrator applies the exponential
trapezoidal rule

    x(t+h) = e^{-mu h} x(t) + (h/2) [e^{-mu h} f(x(t-1)) + f(x(t+h-1))],

i.e. variation of constants with the delayed source integrated by the
trapezoid rule.  The scheme is globally second order in h and, because all
coefficients are nonnegative and f is monotone, it inherits the order
preservation of the exact semiflow nodewise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import GridMismatch, NonFinite, OutOfRange
from .model import Nonlinearity, eval_f


@dataclass
class Segment:
    """A sampled function on [-1, 0]; node i sits at s_i = -1 + i/n."""

    values: np.ndarray
    deriv: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.deriv is not None:
            self.deriv = np.asarray(self.deriv, dtype=float)
            if self.deriv.shape != self.values.shape:
                raise GridMismatch("deriv and values must have the same length")

    @property
    def n(self) -> int:
        return len(self.values) - 1

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def nodes(self) -> np.ndarray:
        return np.linspace(-1.0, 0.0, self.n + 1)

    def copy(self) -> "Segment":
        return Segment(self.values.copy(), None if self.deriv is None else self.deriv.copy())


def constant_segment(value: float, n: int) -> Segment:
    return Segment(np.full(n + 1, float(value)), np.zeros(n + 1))


def segment_from_callable(fn, n: int, deriv_fn=None) -> Segment:
    s = np.linspace(-1.0, 0.0, n + 1)
    d = None if deriv_fn is None else np.asarray([deriv_fn(v) for v in s], dtype=float)
    return Segment(np.asarray([fn(v) for v in s], dtype=float), d)


class OrderRelation(Enum):
    EQ = "eq"
    LEQ = "leq"
    GEQ = "geq"
    LL = "ll"            # strictly below at every node (the pointwise <<)
    GG = "gg"
    INCOMPARABLE = "incomparable"


def order_relation(phi: Segment, psi: Segment, tol: float = 1e-9) -> OrderRelation:
    """Nodewise comparison of two segments.

    EQ when max|phi - psi| <= tol; LL/GG when strict beyond tol at every
    node; LEQ/GEQ when one-sided within tol; INCOMPARABLE otherwise.
    Degenerate equality reports EQ, never LL.
    """
    if phi.n != psi.n:
        raise GridMismatch(f"segment grids differ: {phi.n} vs {psi.n}")
    d = psi.values - phi.values
    if np.max(np.abs(d)) <= tol:
        return OrderRelation.EQ
    if np.all(d > tol):
        return OrderRelation.LL
    if np.all(d < -tol):
        return OrderRelation.GG
    if np.all(d >= -tol):
        return OrderRelation.LEQ
    if np.all(d <= tol):
        return OrderRelation.GEQ
    return OrderRelation.INCOMPARABLE


def steps_for(T: float, h: float) -> int:
    """Number of integration steps covering T, rounded up to the lattice."""
    k = math.ceil(T / h - 1e-9)
    return max(k, 0)


@dataclass
class Trajectory:
    """Node samples of a solution; index i is time t0 - 1 + i*h.

    Indices 0..n hold the initial segment (times [t0-1, t0]).  node_deriv
    holds exact derivatives from the equation at indices >= n; history
    derivatives come from the initial segment when it carries them, else NaN.
    """

    nl: Nonlinearity
    n: int
    t0: float
    values: np.ndarray
    node_deriv: np.ndarray = field(repr=False, default=None)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def t_end(self) -> float:
        return self.t0 - 1.0 + (len(self.values) - 1) * self.h

    def times(self) -> np.ndarray:
        return self.t0 - 1.0 + np.arange(len(self.values)) * self.h

    def index_at(self, t: float) -> float:
        return (t - (self.t0 - 1.0)) * self.n


def _fill_derivs(nl: Nonlinearity, n: int, values: np.ndarray, init_deriv) -> np.ndarray:
    d = np.full(values.shape, np.nan)
    if init_deriv is not None:
        d[: n + 1] = init_deriv
    # at nodes from t0 on, the equation defines the derivative exactly
    d[n:] = -nl.mu * values[n:] + eval_f(nl, values[: len(values) - n])
    return d


def integrate(nl: Nonlinearity, phi: Segment, T: float) -> Trajectory:
    """Advance the segment phi forward by T time units (rounded up to the grid)."""
    n = phi.n
    steps = steps_for(T, 1.0 / n)
    values = np.empty(n + 1 + steps)
    values[: n + 1] = phi.values
    _advance_inplace(nl, n, values, steps)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise NonFinite(int(bad[0]))
    traj = Trajectory(nl=nl, n=n, t0=0.0, values=values)
    traj.node_deriv = _fill_derivs(nl, n, values, phi.deriv)
    return traj


def integrate_batch(nl: Nonlinearity, initial: np.ndarray, T: float) -> tuple[np.ndarray, np.ndarray]:
    """Advance many initial segments at once.

    initial has shape (n+1, m); returns (values, bad) where values has shape
    (n+1+steps, m) and bad marks columns that went non-finite (flagged, not
    fatal to the batch).
    """
    n = initial.shape[0] - 1
    steps = steps_for(T, 1.0 / n)
    values = np.empty((n + 1 + steps, initial.shape[1]))
    values[: n + 1] = initial
    _advance_inplace(nl, n, values, steps)
    bad = ~np.isfinite(values).all(axis=0)
    if bad.any():
        values[:, bad] = np.nan_to_num(values[:, bad], nan=np.nan, posinf=np.nan, neginf=np.nan)
    return values, bad


def _advance_inplace(nl: Nonlinearity, n: int, values: np.ndarray, steps: int) -> None:
    h = 1.0 / n
    E = math.exp(-nl.mu * h)
    c1 = 0.5 * h * E
    c2 = 0.5 * h
    fx = np.empty_like(values)
    fx[: n + 1] = eval_f(nl, values[: n + 1])
    for i in range(n, n + steps):
        x_next = E * values[i] + c1 * fx[i - n] + c2 * fx[i + 1 - n]
        values[i + 1] = x_next
        fx[i + 1] = eval_f(nl, x_next)


def trajectory_from_batch(nl: Nonlinearity, n: int, column: np.ndarray, init_deriv=None) -> Trajectory:
    traj = Trajectory(nl=nl, n=n, t0=0.0, values=np.ascontiguousarray(column))
    traj.node_deriv = _fill_derivs(nl, n, traj.values, init_deriv)
    return traj


def segment_at(traj: Trajectory, t: float) -> Segment:
    """Segment at a node time; t is snapped to the nearest node.

    Callers work on the node lattice: an offset beyond h/2 raises OutOfRange.
    """
    pos = traj.index_at(t)
    i = round(pos)
    if abs(pos - i) > 0.5 + 1e-9:
        raise OutOfRange(f"t = {t} is more than h/2 off the node lattice")
    if i < traj.n or i >= len(traj.values):
        raise OutOfRange(f"t = {t} outside [{traj.t0}, {traj.t_end}]")
    vals = traj.values[i - traj.n : i + 1].copy()
    der = traj.node_deriv[i - traj.n : i + 1].copy()
    return Segment(vals, der if np.isfinite(der).all() else None)


def _hermite(v0, d0, v1, d1, h, theta):
    t2 = theta * theta
    t3 = t2 * theta
    return (
        (2 * t3 - 3 * t2 + 1) * v0
        + (t3 - 2 * t2 + theta) * h * d0
        + (-2 * t3 + 3 * t2) * v1
        + (t3 - t2) * h * d1
    )


def _hermite_deriv(v0, d0, v1, d1, h, theta):
    t2 = theta * theta
    return (
        (6 * t2 - 6 * theta) * v0 / h
        + (3 * t2 - 4 * theta + 1) * d0
        + (-6 * t2 + 6 * theta) * v1 / h
        + (3 * t2 - 2 * theta) * d1
    )


def value_at(traj: Trajectory, t: float) -> float:
    """Solution value at arbitrary t by cubic Hermite interpolation of the nodes."""
    pos = traj.index_at(t)
    if pos < -1e-9 or pos > len(traj.values) - 1 + 1e-9:
        raise OutOfRange(f"t = {t} outside the trajectory")
    k = min(int(np.floor(pos)), len(traj.values) - 2)
    k = max(k, 0)
    theta = pos - k
    v0, v1 = traj.values[k], traj.values[k + 1]
    d0, d1 = traj.node_deriv[k], traj.node_deriv[k + 1]
    if np.isfinite(d0) and np.isfinite(d1):
        return float(_hermite(v0, d0, v1, d1, traj.h, theta))
    return float(v0 * (1 - theta) + v1 * theta)


def segment_interp(traj: Trajectory, t: float) -> Segment:
    """Segment at arbitrary t: node values by cubic Hermite interpolation.

    Used by the return-map and shooting machinery where the return time is
    not a lattice point.  The interpolant is linear in the stored node data,
    so differentiating a trajectory of the scheme and interpolating commute;
    the same routine therefore serves the variational solver.
    """
    n = traj.n
    pos0 = traj.index_at(t - 1.0)
    if pos0 < -1e-9 or pos0 + n > len(traj.values) - 1 + 1e-9:
        raise OutOfRange(f"segment at t = {t} not covered by the trajectory")
    k0 = int(np.floor(pos0 + 1e-12))
    theta = pos0 - k0
    if k0 + n + 1 > len(traj.values) - 1:
        k0 = len(traj.values) - 2 - n
        theta = pos0 - k0
    idx = k0 + np.arange(n + 1)
    if theta < 1e-12:
        vals = traj.values[idx].copy()
        ders = traj.node_deriv[idx].copy()
        return Segment(vals, ders if np.isfinite(ders).all() else None)
    v0, v1 = traj.values[idx], traj.values[idx + 1]
    d0, d1 = traj.node_deriv[idx], traj.node_deriv[idx + 1]
    ok = np.isfinite(d0) & np.isfinite(d1)
    vals = np.where(ok, _hermite(v0, np.nan_to_num(d0), v1, np.nan_to_num(d1), traj.h, theta),
                    v0 * (1 - theta) + v1 * theta)
    ders = np.where(ok, _hermite_deriv(v0, np.nan_to_num(d0), v1, np.nan_to_num(d1), traj.h, theta),
                    (v1 - v0) / traj.h)
    return Segment(vals, ders)


def export_csv(traj: Trajectory, path) -> None:
    """Write the trajectory as `t,x` rows with 17 significant digits."""
    with open(path, "w") as fh:
        fh.write("t,x\n")
        for t, x in zip(traj.times(), traj.values):
            fh.write(f"{t:.17g},{x:.17g}\n")
