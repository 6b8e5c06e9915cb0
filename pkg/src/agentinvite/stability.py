"""Local stability of the boundary-free fluid system.

Away from the reflecting boundary the centered fluid dynamics are a
switched linear system with two regimes, ``u' = A1 u`` for ``y >= 0`` and
``u' = A2 u`` for ``y < 0``.  Hurwitz-ness is tested through the 3x3
Routh-Hurwitz criterion.  Existence of a common quadratic Lyapunov
function follows from the rank-one criterion: with both matrices Hurwitz
and ``A1 - A2`` of rank one, it holds iff ``A1 A2`` has no negative real
eigenvalue.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import ModelParams

COROLLARY_IDS = (1, 7, 5, 8, 9, 2, 11, 12, 3, 4, 6, 10)


@dataclass(frozen=True)
class SwitchedPair:
    A1: np.ndarray
    A2: np.ndarray

    def difference_rank_one(self) -> bool:
        """Structural rank check: only the middle column of ``A1 - A2`` may be nonzero."""
        D = np.asarray(self.A1, dtype=float) - np.asarray(self.A2, dtype=float)
        return bool(np.all(D[:, 0] == 0) and np.all(D[:, 2] == 0) and np.any(D[:, 1] != 0))


@dataclass(frozen=True)
class CubicCoeffs:
    """Coefficients of ``a0 s^3 + a1 s^2 + a2 s + a3``."""

    a0: float
    a1: float
    a2: float
    a3: float

    def __call__(self, s):
        return ((self.a0 * s + self.a1) * s + self.a2) * s + self.a3

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a0, self.a1, self.a2, self.a3)


@dataclass(frozen=True)
class CorollaryResult:
    applicable: bool
    satisfied: bool
    threshold: float | None = None


@dataclass
class StabilityReport:
    a1_hurwitz: bool
    a2_hurwitz: bool
    a2_hurwitz_closed_form: bool
    cond_i: bool
    cond_ii: bool
    cqlf_exists: bool | None
    thresholds: dict[str, float]
    corollaries: dict[int, CorollaryResult]
    char_poly_a1: tuple[float, ...] = ()
    char_poly_a2: tuple[float, ...] = ()
    product_eigenvalues: list[tuple[float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "a1_hurwitz": self.a1_hurwitz,
            "a2_hurwitz": self.a2_hurwitz,
            "a2_hurwitz_closed_form": self.a2_hurwitz_closed_form,
            "cond_i": self.cond_i,
            "cond_ii": self.cond_ii,
            "cqlf_exists": self.cqlf_exists,
            "locally_stable_sufficient": self.cond_i or self.cond_ii,
            "thresholds": dict(self.thresholds),
            "corollaries": {str(k): asdict(v) for k, v in self.corollaries.items()},
            "char_poly_a1": list(self.char_poly_a1),
            "char_poly_a2": list(self.char_poly_a2),
            "product_eigenvalues": [list(ev) for ev in self.product_eigenvalues],
        }


def build_matrices(params: ModelParams) -> SwitchedPair:
    a, b, m = params.alpha, params.beta, params.mu
    d, th, g, e = params.delta, params.theta, params.gamma, params.epsilon
    A1 = np.array(
        [
            [-g * b, g * a * m + g * th - e, -g * a * m],
            [b, -a * m - th, a * m],
            [b, (1 - a) * m - th, -(1 - a) * m],
        ]
    )
    A2 = np.array(
        [
            [-g * b, g * d - e, -g * a * m],
            [b, -d, a * m],
            [b, 0.0, -(1 - a) * m],
        ]
    )
    return SwitchedPair(A1, A2)


def char_poly(A) -> CubicCoeffs:
    """Monic coefficients of ``det(sI - A)`` for a 3x3 matrix."""
    A = np.asarray(A, dtype=float)
    trace = A[0, 0] + A[1, 1] + A[2, 2]
    minors = (
        A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        + A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0]
        + A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1]
    )
    det = (
        A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
        - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
        + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0])
    )
    return CubicCoeffs(1.0, float(-trace), float(minors), float(-det))


def is_hurwitz_cubic(c: CubicCoeffs) -> bool:
    if not c.a0 > 0:
        raise ValueError("not a monic-orientable cubic")
    return c.a1 > 0 and c.a2 > 0 and c.a3 > 0 and c.a1 * c.a2 > c.a0 * c.a3


def a2_hurwitz_condition(params: ModelParams) -> bool:
    a, b, m = params.alpha, params.beta, params.mu
    d, g, e = params.delta, params.gamma, params.epsilon
    lhs = ((b * g + d) / m + (1 - a)) * ((b * g * m + d * m * (1 - a)) / (b * e) + 1)
    return lhs > 1


def condition_i(params: ModelParams) -> tuple[bool, tuple[float, float]]:
    """Gain condition (i): ``gamma`` above both operands; returns the operands too."""
    a, b, m = params.alpha, params.beta, params.mu
    d, g, e = params.delta, params.gamma, params.epsilon
    first = (a * m - d) / b
    second = math.sqrt(((2 - a) * e * m + a * e * d) / (b * m))
    return g > max(first, second), (first, second)


def condition_ii(params: ModelParams) -> tuple[bool, tuple[float, float]]:
    a, b, m = params.alpha, params.beta, params.mu
    d, g, e = params.delta, params.gamma, params.epsilon
    drift = a * m - d
    first = (drift + math.sqrt(drift * drift + 4 * a * m * m)) / (2 * b)
    second = math.sqrt(max(a * e * (d - m) / (b * m), 0.0))
    return g > max(first, second), (first, second)


def a1_inverse(params: ModelParams) -> np.ndarray:
    a, b, m = params.alpha, params.beta, params.mu
    th, g, e = params.theta, params.gamma, params.epsilon
    return np.array(
        [
            [-th / (b * e), -(a * e - e + g * th) / (b * e), a / b],
            [-1 / e, -g / e, 0.0],
            [-1 / e, (e - g * m) / (e * m), -1 / m],
        ]
    )


def det_poly_numerator(params: ModelParams) -> CubicCoeffs:
    """Numerator of ``det(A1^-1 + tau A2)`` over ``-beta eps mu``, as a cubic in ``tau``."""
    a, b, m = params.alpha, params.beta, params.mu
    d, th, g, e = params.delta, params.theta, params.gamma, params.epsilon
    lead = b**2 * e**2 * m**2
    quad = (
        b**2 * e**2 + b**2 * g**2 * m**2 - 2 * b * e * m**2 + d * m**2 * th
        + a * b * e * m**2 + b * d * g * m**2 - a * d * m**2 * th + b * g * m**2 * th
        - a * b * d * e * m - a * b * d * g * m**2
    )
    lin = (
        m**2 - a * m**2 + b**2 * g**2 - 2 * b * e + d * th + b * d * g
        + a * d * m + b * g * th - a * m * th - a * b * g * m
    )
    return CubicCoeffs(lead, quad, lin, 1.0)


def cubic_roots(c: CubicCoeffs) -> list[complex]:
    """All three roots of a cubic by the trigonometric / Cardano formulas.

    Real roots are refined with two Newton steps on the original
    polynomial.  When the roots are not all real, the complex pair is
    returned as two conjugate entries.
    """
    if c.a0 == 0:
        raise ValueError("leading coefficient must be nonzero")
    b, cc, d = c.a1 / c.a0, c.a2 / c.a0, c.a3 / c.a0
    shift = b / 3.0
    p = cc - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * cc / 3.0 + d
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3

    if p == 0.0 and q == 0.0:
        roots: list[complex] = [complex(-shift)] * 3
    elif disc < 0:
        # three distinct real roots; p < 0 here
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = max(-1.0, min(1.0, 3.0 * q / (p * m)))
        phi = math.acos(arg) / 3.0
        roots = [complex(m * math.cos(phi - 2.0 * math.pi * k / 3.0) - shift) for k in range(3)]
    else:
        sq = math.sqrt(disc)
        u = math.copysign(abs(-q / 2.0 + sq) ** (1.0 / 3.0), -q / 2.0 + sq)
        w = math.copysign(abs(-q / 2.0 - sq) ** (1.0 / 3.0), -q / 2.0 - sq)
        re = -(u + w) / 2.0 - shift
        im = math.sqrt(3.0) / 2.0 * (u - w)
        roots = [complex(u + w - shift), complex(re, im), complex(re, -im)]

    deriv = CubicCoeffs(0.0, 3 * c.a0, 2 * c.a1, c.a2)
    polished = []
    for z in roots:
        if z.imag == 0.0:
            s = z.real
            for _ in range(2):
                slope = deriv(s)
                if slope == 0.0:
                    break
                step = c(s) / slope
                if not math.isfinite(step):
                    break
                s -= step
            z = complex(s)
        polished.append(z)
    return polished


def eigenvalues_3x3(M) -> list[complex]:
    return cubic_roots(char_poly(M))


def eig_tolerance(M) -> float:
    return 1e-9 * (1.0 + float(np.abs(np.asarray(M)).sum(axis=1).max()))


def cqlf_exists(pair: SwitchedPair) -> bool | None:
    """Decide CQLF existence for the two-regime system.

    A real eigenvalue of ``A1 A2`` within ``tol`` of zero is resolved by
    deflation, ``det(A1) det(A2) / (product of the other two roots)``:
    both determinants are negative for 3x3 Hurwitz matrices, so the
    product is nonsingular and the sign is well defined.  Returns ``None``
    when that refinement is itself marginal, when a near-real negative
    eigenvalue cannot be resolved, or when ``A1 - A2`` is not rank one.
    """
    c1, c2 = char_poly(pair.A1), char_poly(pair.A2)
    if not (is_hurwitz_cubic(c1) and is_hurwitz_cubic(c2)):
        return False
    if not pair.difference_rank_one():
        return None
    P = np.asarray(pair.A1) @ np.asarray(pair.A2)
    tol = eig_tolerance(P)
    det_P = c1.a3 * c2.a3
    eigs = eigenvalues_3x3(P)
    verdict: bool | None = True
    for i, z in enumerate(eigs):
        if abs(z.imag) > tol:
            continue
        if z.imag != 0.0 and z.real < -tol:
            verdict = None
        elif z.real < -tol:
            return False
        elif z.real < tol:
            others = [w for j, w in enumerate(eigs) if j != i]
            rest = (others[0] * others[1]).real
            if abs(rest) <= tol:
                verdict = None
            elif det_P / rest < 0:
                return False
    return verdict


def corollary_report(params: ModelParams) -> dict[int, CorollaryResult]:
    """Hypothesis and gain inequality of each special-case corollary."""
    a, b, m = params.alpha, params.beta, params.mu
    d, g, e = params.delta, params.gamma, params.epsilon
    drift = a * m - d
    _, (i_first, i_second) = condition_i(params)
    _, (ii_first, ii_second) = condition_ii(params)
    level_gain = i_second
    eps_bound = drift**2 * m / ((2 - a) * m * b + a * d * b)
    no_cust_abandon = d == 0
    eps_bound_d0 = a**2 * m**2 / ((2 - a) * b)

    def rec(applicable: bool, threshold: float) -> CorollaryResult:
        return CorollaryResult(bool(applicable), bool(g > threshold), threshold)

    cor2 = (drift + math.sqrt(drift**2 + 8 * b * e)) / (2 * b)
    cor6 = (a * m + math.sqrt(a**2 * m**2 + 8 * b * e)) / (2 * b)
    cor10 = (a + math.sqrt(a**2 + 4 * a)) * m / (2 * b)
    # epsilon ceiling under which the level-gain bound holds at this gamma
    eps_ceiling = g**2 * b * m / ((2 - a) * m + a * d)

    out = {
        1: rec(True, min(max(i_first, i_second), max(ii_first, ii_second))),
        7: rec(drift <= 0, level_gain),
        5: CorollaryResult(drift <= 0, e < eps_ceiling, eps_ceiling),
        8: rec(drift > 0 and e <= eps_bound, drift / b),
        9: rec(drift > 0 and e > eps_bound, level_gain),
        2: rec(drift >= 0, cor2),
        11: rec(m > d, ii_first),
        12: CorollaryResult(a == 0, True, None),
        3: rec(no_cust_abandon and 0 < a < 1 and e <= eps_bound_d0, a * m / b),
        4: rec(no_cust_abandon and 0 < a < 1 and e > eps_bound_d0, math.sqrt((2 - a) * e / b)),
        6: rec(no_cust_abandon, cor6),
        10: rec(no_cust_abandon, cor10),
    }
    return {k: out[k] for k in COROLLARY_IDS}


def stability_report(params: ModelParams) -> StabilityReport:
    pair = build_matrices(params)
    c1, c2 = char_poly(pair.A1), char_poly(pair.A2)
    ok_i, (i_first, i_second) = condition_i(params)
    ok_ii, (ii_first, ii_second) = condition_ii(params)
    eigs = eigenvalues_3x3(pair.A1 @ pair.A2)
    return StabilityReport(
        a1_hurwitz=is_hurwitz_cubic(c1),
        a2_hurwitz=is_hurwitz_cubic(c2),
        a2_hurwitz_closed_form=a2_hurwitz_condition(params),
        cond_i=ok_i,
        cond_ii=ok_ii,
        cqlf_exists=cqlf_exists(pair),
        thresholds={
            "cond_i_drift": i_first,
            "cond_i_level": i_second,
            "cond_ii_drift": ii_first,
            "cond_ii_abandon": ii_second,
        },
        corollaries=corollary_report(params),
        char_poly_a1=c1.as_tuple(),
        char_poly_a2=c2.as_tuple(),
        product_eigenvalues=[(z.real, z.imag) for z in eigs],
    )


def spectral_abscissa(A) -> float:
    return max(z.real for z in eigenvalues_3x3(A))


__all__ = [
    "COROLLARY_IDS",
    "CorollaryResult",
    "CubicCoeffs",
    "StabilityReport",
    "SwitchedPair",
    "a1_inverse",
    "a2_hurwitz_condition",
    "build_matrices",
    "char_poly",
    "condition_i",
    "condition_ii",
    "corollary_report",
    "cqlf_exists",
    "cubic_roots",
    "det_poly_numerator",
    "eigenvalues_3x3",
    "is_hurwitz_cubic",
    "spectral_abscissa",
    "stability_report",
]
