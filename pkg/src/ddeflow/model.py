"""Feedback nonlinearity, its equilibrium structure, and hypothesis checks.

The scalar equation is x'(t) = -mu*x(t) + f(x(t-1)).  Two feedback kinds are
supported: a smooth near-step family

    f(x) = (K/2) * [tanh((x-1)/eps) + tanh((x+1)/eps)]

which is odd, strictly increasing and converges to the hard step of height K
as eps -> 0, and an affine kind f(x) = a*x + b used only to give the
integrator closed-form oracles (it deliberately has the wrong fixed-point
structure).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidKind, NotFiveRoots


class Kind(Enum):
    NEAR_STEP = "near_step"
    AFFINE = "affine"


class Stability(Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class Nonlinearity:
    kind: Kind
    mu: float
    K: float = 0.0
    eps: float = 0.0
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.mu <= 0.0:
            raise ValueError("mu must be positive")
        if self.kind is Kind.NEAR_STEP and (self.K <= 0.0 or self.eps <= 0.0):
            raise ValueError("NEAR_STEP requires K > 0 and eps > 0")


def near_step(K: float, eps: float, mu: float = 1.0) -> Nonlinearity:
    return Nonlinearity(kind=Kind.NEAR_STEP, mu=mu, K=K, eps=eps)


def affine(a: float, b: float, mu: float = 1.0) -> Nonlinearity:
    return Nonlinearity(kind=Kind.AFFINE, mu=mu, a=a, b=b)


def eval_f(nl: Nonlinearity, x):
    """Feedback value f(x); accepts scalars or arrays."""
    if nl.kind is Kind.AFFINE:
        return nl.a * np.asarray(x, dtype=float) + nl.b if np.ndim(x) else nl.a * x + nl.b
    u = (np.asarray(x, dtype=float) - 1.0) / nl.eps
    v = (np.asarray(x, dtype=float) + 1.0) / nl.eps
    out = 0.5 * nl.K * (np.tanh(u) + np.tanh(v))
    return out if np.ndim(x) else float(out)


def _sech2(u):
    # 1/cosh^2 without overflow: 4*e^{-2|u|} / (1 + e^{-2|u|})^2
    e = np.exp(-2.0 * np.abs(u))
    return 4.0 * e / (1.0 + e) ** 2


def eval_f_prime(nl: Nonlinearity, x):
    """Analytic derivative f'(x); strictly positive for the near-step kind."""
    if nl.kind is Kind.AFFINE:
        return np.full(np.shape(x), nl.a) if np.ndim(x) else nl.a
    xa = np.asarray(x, dtype=float)
    out = 0.5 * nl.K / nl.eps * (_sech2((xa - 1.0) / nl.eps) + _sech2((xa + 1.0) / nl.eps))
    return out if np.ndim(x) else float(out)


@dataclass
class EquilibriaReport:
    """The five zeros of -mu*x + f(x) with slopes and local stability."""

    xi: np.ndarray          # ordered, xi[2] == 0
    slopes: np.ndarray      # f'(xi_j)
    stability: list[Stability]

    def xi_by_index(self, j: int) -> float:
        """Equilibrium by the signed index j in {-2,-1,0,1,2}."""
        return float(self.xi[j + 2])

    def to_json_dict(self) -> dict:
        return {
            "xi": [float(v) for v in self.xi],
            "slopes": [float(v) for v in self.slopes],
            "stability": [s.value for s in self.stability],
        }


def _bisect(g, lo: float, hi: float, tol: float) -> float:
    glo = g(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(gm) <= tol:
            return mid
        if glo * gm < 0.0:
            hi = mid
        else:
            lo, glo = mid, gm
    return 0.5 * (lo + hi)


def equilibria(nl: Nonlinearity, grid_step: float = 1e-3, root_tol: float = 1e-12) -> EquilibriaReport:
    """Locate all zeros of g(x) = -mu*x + f(x) on [-2K/mu, 2K/mu].

    Every zero satisfies |x| <= K/mu, so the bracket is generous.  Sign
    changes on the grid are refined by bisection down to |g| <= root_tol.
    Raises NotFiveRoots when the count differs from five.
    """
    if nl.kind is not Kind.NEAR_STEP:
        raise InvalidKind("equilibria requires a NEAR_STEP nonlinearity")

    half = 2.0 * nl.K / nl.mu
    grid = np.arange(-half, half + grid_step, grid_step)
    g = lambda x: -nl.mu * x + eval_f(nl, x)
    gv = -nl.mu * grid + eval_f(nl, grid)

    roots = []
    exact = np.flatnonzero(gv == 0.0)
    for i in exact:
        roots.append(float(grid[i]))
    change = np.flatnonzero(gv[:-1] * gv[1:] < 0.0)
    for i in change:
        roots.append(_bisect(g, float(grid[i]), float(grid[i + 1]), root_tol))
    roots = sorted(roots)

    # collapse accidental duplicates from an exact grid hit next to a sign change
    merged: list[float] = []
    for r in roots:
        if not merged or abs(r - merged[-1]) > 10 * grid_step:
            merged.append(r)

    if len(merged) != 5:
        raise NotFiveRoots(len(merged), merged)

    xi = np.array(merged)
    slopes = np.array([eval_f_prime(nl, x) for x in xi])
    stability = [Stability.STABLE if s < nl.mu else Stability.UNSTABLE for s in slopes]
    return EquilibriaReport(xi=xi, slopes=slopes, stability=stability)


@dataclass
class H1Report:
    ok: bool
    violations: list[str]
    report: EquilibriaReport | None = None


def validate_H1(nl: Nonlinearity, grid_step: float = 1e-3) -> H1Report:
    """Check the standing hypothesis: five alternating equilibria and f' > 0.

    The slope pattern must be f'(xi_j) < mu for j in {-2, 0, 2} and
    f'(xi_k) > mu for k in {-1, 1}; strict monotonicity of f is sampled
    densely at step eps/10 over the root bracket.
    """
    if nl.kind is not Kind.NEAR_STEP:
        raise InvalidKind("validate_H1 requires a NEAR_STEP nonlinearity")

    violations: list[str] = []
    report = equilibria(nl, grid_step=grid_step)

    for pos, j in enumerate((-2, -1, 0, 1, 2)):
        slope = report.slopes[pos]
        if j in (-2, 0, 2) and not slope < nl.mu:
            violations.append(f"f'(xi_{j}) = {slope:.6g} is not below mu = {nl.mu:.6g}")
        if j in (-1, 1) and not slope > nl.mu:
            violations.append(f"f'(xi_{j}) = {slope:.6g} is not above mu = {nl.mu:.6g}")

    half = 2.0 * nl.K / nl.mu
    sample = np.arange(-half, half + nl.eps / 10.0, nl.eps / 10.0)
    fp = eval_f_prime(nl, sample)
    if not np.all(fp > 0.0):
        bad = sample[np.argmin(fp)]
        violations.append(f"f' is not strictly positive near x = {bad:.6g}")

    return H1Report(ok=not violations, violations=violations, report=report)
