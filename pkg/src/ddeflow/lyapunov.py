"""Discrete Lyapunov functional: sign-change counting on segments.

V maps a nonzero segment to an even count (or an overflow marker standing in
for infinity at finite resolution).  Along differences of solutions of the
monotone feedback equation V is non-increasing in time, which is what makes
it useful as an oracle: tests integrate pairs of solutions and assert the
monotone decay of V of their difference.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoDerivative, ZeroSegment
from .semiflow import Segment

#: default relative threshold below which a node counts as zero; scaling a
#: segment by a positive constant then leaves the count unchanged
TOL_ZERO_REL = 1e-9


def _zero_tol(phi: Segment, tol_zero: float | None) -> float:
    if tol_zero is not None:
        return tol_zero
    return TOL_ZERO_REL * phi.sup_norm()


def sign_changes(phi: Segment, tol_zero: float | None = None) -> int:
    """Count sign changes between consecutive nodes that survive the zero filter.

    Nodes with |value| <= tol_zero are skipped entirely, so a plateau of
    near-zeros collapses to a single zero.  Raises ZeroSegment when no node
    survives (the functional is undefined at the zero function).
    """
    tol = _zero_tol(phi, tol_zero)
    surviving = phi.values[np.abs(phi.values) > tol]
    if surviving.size == 0:
        raise ZeroSegment("segment is numerically indistinguishable from 0")
    signs = np.sign(surviving)
    return int(np.sum(signs[1:] * signs[:-1] < 0.0))


@dataclass(frozen=True)
class VValue:
    """Even sign-change count, or an overflow marker (proxy for infinity)."""

    value: int | None
    overflow: bool = False

    def __eq__(self, other):
        if isinstance(other, VValue):
            return self.value == other.value and self.overflow == other.overflow
        if isinstance(other, int):
            return not self.overflow and self.value == other
        return NotImplemented

    def __le__(self, other: "VValue"):
        if self.overflow:
            return other.overflow
        if other.overflow:
            return True
        return self.value <= other.value

    def __lt__(self, other: "VValue"):
        return self <= other and self != other

    def __repr__(self):
        return "V(overflow)" if self.overflow else f"V({self.value})"


OVERFLOW = VValue(value=None, overflow=True)


def v_value(phi: Segment, tol_zero: float | None = None) -> VValue:
    """The functional itself: sc if even, sc+1 if odd, overflow above n/4.

    A genuine slowly oscillating object has at most two sign changes; a
    count beyond n/4 at grid resolution is noise standing in for infinity.
    """
    sc = sign_changes(phi, tol_zero)
    if sc > phi.n / 4:
        return OVERFLOW
    return VValue(sc if sc % 2 == 0 else sc + 1)


def in_R(phi: Segment, tol_zero: float | None = None, tol_simple: float = 1e-8) -> bool:
    """Regularity test: endpoints not at degenerate zeros and all zeros simple.

    Requires node derivatives; segments extracted from trajectories carry
    exact ones.  The conditions mirror the definition of the regular set:
    phi(0) != 0 or phi'(0)*phi(-1) > 0; phi(-1) != 0 or phi'(-1)*phi(0) < 0;
    and every zero has |phi'| above tol_simple at grid resolution.
    """
    if phi.deriv is None:
        raise NoDerivative("in_R needs node derivatives")
    tol = _zero_tol(phi, tol_zero)
    v, d = phi.values, phi.deriv

    if abs(v[-1]) <= tol and not d[-1] * v[0] > 0.0:
        return False
    if abs(v[0]) <= tol and not d[0] * v[-1] < 0.0:
        return False

    # zeros sitting on nodes (clusters of near-zero nodes count once)
    near = np.abs(v) <= tol
    i = 0
    while i <= phi.n:
        if near[i]:
            j = i
            while j + 1 <= phi.n and near[j + 1]:
                j += 1
            mid = (i + j) // 2
            if abs(d[mid]) <= tol_simple:
                return False
            i = j + 1
        else:
            i += 1

    # zeros crossed between consecutive surviving nodes
    idx = np.flatnonzero(~near)
    for a, b in zip(idx[:-1], idx[1:]):
        if v[a] * v[b] < 0.0:
            # linear model of the crossing inside [s_a, s_b]
            frac = v[a] / (v[a] - v[b])
            slope = d[a] * (1.0 - frac) + d[b] * frac
            if abs(slope) <= tol_simple:
                return False
    return True
