"""Variational solves along a trajectory, monodromy matrices, Floquet spectra.

The linear variational equation v'(t) = -mu*v(t) + f'(x(t-1)) v(t-1) is
advanced with the same exponential trapezoidal rule as the nonlinear
integrator, with coefficients read off the base trajectory's nodes.  The
discrete scheme is then the exact derivative of the discrete nonlinear
step, so finite-difference checks against the integrator agree to the
order of the perturbation, not of the grid.

The monodromy matrix discretizes the derivative of the period map: column
j is the segment at time omega of the variational solution started from
the j-th nodal hat function.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg

from .errors import EigenFail, GridMismatch, NonhyperbolicWarning, OutOfRange
from .model import Nonlinearity, eval_f_prime
from .semiflow import Segment, Trajectory, _hermite, _hermite_deriv, steps_for

if TYPE_CHECKING:  # pragma: no cover
    from .poincare import PeriodicOrbit

#: classification band around |lambda| = 1
TOL_BAND = 1e-2
#: imaginary parts below this are zeroed (real multiplier)
CONJ_IMAG_TOL = 1e-10


def variational_values(base: Trajectory, initial: np.ndarray, T: float) -> np.ndarray:
    """Advance initial variational data (shape (n+1,) or (n+1, m)) by T.

    The result rows are aligned with the base trajectory's nodes starting
    at base.t0 - 1.  Raises OutOfRange if the base does not cover [t0-1, t0+T].
    """
    n = base.n
    if initial.shape[0] != n + 1:
        raise GridMismatch("variational initial data does not match the base grid")
    steps = steps_for(T, base.h)
    if n + steps > len(base.values) - 1:
        raise OutOfRange("base trajectory too short for the requested horizon")

    E = math.exp(-base.nl.mu * base.h)
    c1 = 0.5 * base.h * E
    c2 = 0.5 * base.h
    fp = eval_f_prime(base.nl, base.values[: steps + 1])

    out_shape = (n + 1 + steps,) + initial.shape[1:]
    v = np.empty(out_shape)
    v[: n + 1] = initial
    for i in range(n, n + steps):
        v[i + 1] = E * v[i] + (c1 * fp[i - n]) * v[i - n] + (c2 * fp[i + 1 - n]) * v[i + 1 - n]
    return v


def _variational_derivs(base: Trajectory, v: np.ndarray, init_deriv=None) -> np.ndarray:
    n = base.n
    d = np.full(v.shape, np.nan)
    if init_deriv is not None:
        d[: n + 1] = init_deriv
    fp = eval_f_prime(base.nl, base.values[: len(v) - n])
    if v.ndim == 1:
        d[n:] = -base.nl.mu * v[n:] + fp * v[: len(v) - n]
    else:
        d[n:] = -base.nl.mu * v[n:] + fp[:, None] * v[: len(v) - n]
    return d


def solve_variational(base: Trajectory, eta: Segment, T: float) -> Trajectory:
    """Solution of the linear variational equation along base, started at eta."""
    v = variational_values(base, eta.values, T)
    traj = Trajectory(nl=base.nl, n=base.n, t0=base.t0, values=v)
    traj.node_deriv = _variational_derivs(base, v, eta.deriv)
    return traj


def interp_columns(values: np.ndarray, derivs: np.ndarray, n: int, pos0: float) -> np.ndarray:
    """Segment rows at fractional node position pos0, for every column at once."""
    k0 = int(np.floor(pos0 + 1e-12))
    theta = pos0 - k0
    if k0 + n + 1 > len(values) - 1:
        k0 = len(values) - 2 - n
        theta = pos0 - k0
    if k0 < 0:
        raise OutOfRange("interpolation window not covered")
    idx = k0 + np.arange(n + 1)
    if theta < 1e-12:
        return values[idx].copy()
    h = 1.0 / n
    return _hermite(values[idx], derivs[idx], values[idx + 1], derivs[idx + 1], h, theta)


@dataclass
class MonodromyMatrix:
    """Dense discretization of the derivative of the period map."""

    entries: np.ndarray
    omega: float
    orbit_ref: str

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


def monodromy_from_base(base: Trajectory, omega: float, orbit_ref: str = "") -> MonodromyMatrix:
    """Assemble all n+1 monodromy columns from nodal hat basis segments."""
    n = base.n
    v = variational_values(base, np.eye(n + 1), omega + 2 * base.h)
    d = _variational_derivs(base, v)
    pos0 = (omega - 1.0 - (base.t0 - 1.0)) * n
    cols = interp_columns(v, d, n, pos0)
    return MonodromyMatrix(entries=np.ascontiguousarray(cols), omega=omega, orbit_ref=orbit_ref)


def monodromy_matrix(orbit: "PeriodicOrbit") -> MonodromyMatrix:
    """Monodromy matrix of a found periodic orbit (linearization over one period)."""
    return monodromy_from_base(orbit.base_trajectory(), orbit.omega, orbit_ref=orbit.label.value)


@dataclass
class FloquetSpectrum:
    """Multipliers sorted by decreasing modulus, with matched eigenvectors."""

    multipliers: np.ndarray          # complex, sorted by |.| descending
    eigenvectors: np.ndarray         # complex, column i matches multipliers[i]
    n_unstable: int
    trivial_index: int
    trivial_residual: float
    omega: float
    tol_band: float = TOL_BAND
    left_trivial: np.ndarray | None = field(default=None, repr=False)

    def multiplier(self, i: int) -> complex:
        return complex(self.multipliers[i])

    def real_eigenvector(self, i: int) -> np.ndarray:
        lam = self.multipliers[i]
        if lam.imag != 0.0:
            raise EigenFail(f"multiplier {lam} is not real")
        v = self.eigenvectors[:, i]
        # rotate the complex phase away, then fix the sign by positive mean
        j = int(np.argmax(np.abs(v)))
        v = (v / (v[j] / abs(v[j]))).real
        if v.mean() < 0.0:
            v = -v
        return v / np.max(np.abs(v))

    def unstable_indices(self) -> list[int]:
        return [i for i, lam in enumerate(self.multipliers) if abs(lam) > 1.0 + self.tol_band]

    def to_json_dict(self) -> dict:
        return {
            "period": self.omega,
            "multipliers": [{"re": float(l.real), "im": float(l.imag)} for l in self.multipliers],
            "n_unstable": self.n_unstable,
            "trivial_residual": self.trivial_residual,
        }


def floquet_spectrum(M: MonodromyMatrix, tol_band: float = TOL_BAND, with_left: bool = True) -> FloquetSpectrum:
    """Dense nonsymmetric eigensolve of the monodromy matrix.

    Multipliers are sorted by modulus, tiny imaginary parts are zeroed, the
    count above the unit band is recorded, and the left eigenvector of the
    multiplier nearest 1 is kept for section construction.  A nontrivial
    multiplier inside the band around the unit circle raises a
    NonhyperbolicWarning (detected and flagged, not resolved).
    """
    A = M.entries
    try:
        if with_left:
            w, vl, vr = scipy.linalg.eig(A, left=True, right=True)
        else:
            w, vr = scipy.linalg.eig(A)
            vl = None
    except np.linalg.LinAlgError as exc:  # pragma: no cover - numerical breakdown
        raise EigenFail(str(exc)) from exc
    if not np.all(np.isfinite(w.view(float))):
        raise EigenFail("eigensolver returned non-finite multipliers")

    order = np.argsort(-np.abs(w), kind="stable")
    w = w[order]
    vr = vr[:, order]
    if vl is not None:
        vl = vl[:, order]

    small = np.abs(w.imag) <= CONJ_IMAG_TOL * np.maximum(1.0, np.abs(w))
    w = np.where(small, w.real + 0.0j, w)

    n_unstable = int(np.sum(np.abs(w) > 1.0 + tol_band))
    trivial_index = int(np.argmin(np.abs(w - 1.0)))
    trivial_residual = float(abs(w[trivial_index] - 1.0))

    near_unit = np.abs(np.abs(w) - 1.0) <= tol_band
    near_unit[trivial_index] = False
    if np.any(near_unit):
        lams = ", ".join(f"{l:.6g}" for l in w[near_unit])
        warnings.warn(
            f"nontrivial multiplier(s) near the unit circle: {lams}",
            NonhyperbolicWarning,
            stacklevel=2,
        )

    left_trivial = None
    if vl is not None:
        lt = vl[:, trivial_index]
        j = int(np.argmax(np.abs(lt)))
        lt = (lt / (lt[j] / abs(lt[j]))).real
        left_trivial = lt

    return FloquetSpectrum(
        multipliers=w,
        eigenvectors=vr,
        n_unstable=n_unstable,
        trivial_index=trivial_index,
        trivial_residual=trivial_residual,
        omega=M.omega,
        tol_band=tol_band,
        left_trivial=left_trivial,
    )


def eigen_residuals(M: MonodromyMatrix, spec: FloquetSpectrum) -> np.ndarray:
    """Residuals ||M v - lambda v|| / ||M|| for every reported pair."""
    A = M.entries
    norm = np.linalg.norm(A, 2)
    res = np.empty(len(spec.multipliers))
    for i, lam in enumerate(spec.multipliers):
        v = spec.eigenvectors[:, i]
        res[i] = np.linalg.norm(A @ v - lam * v) / norm
    return res
