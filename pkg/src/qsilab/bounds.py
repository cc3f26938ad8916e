"""Analytic bounds and witness computations for the identity tests.

Everything that can be a rational is computed as an exact Fraction; floats
appear only as reporting views or where the quantity is inherently
transcendental (the pi^2/6 asymptote).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations as _lex_permutations
from typing import NamedTuple

import numpy as np

from .identity_tests import TestKind, run_circuit
from .instances import QsiInstance
from .limits import PROJECTOR_MAX_DIM, SYM_ENUM_MAX_N, CapExceededError
from .qmath import DensityMatrix, PureState, basis_state, mixture, tensor, trace_distance

#: Largest n for the factorial-ratio bounds.
TWO_BLOCK_MAX_N = 40

#: Case labels for the per-divisor alignment-probability bound.
CASE_SMALL_S = "s<=r/3"
CASE_HALF_R = "s=r/2"
CASE_FULL_R = "s=r"
CASE_UNCOVERED = "uncovered"


@dataclass(frozen=True)
class RationalBound:
    """An exact rational plus its float view."""

    value: Fraction
    float_view: float

    @classmethod
    def of(cls, value: Fraction) -> "RationalBound":
        return cls(value, float(value))


def two_block_soundness(n: int, l: int) -> RationalBound:
    """Stabilizer ratio l!(n-l)!/n! for a two-block split; always <= 1/n."""
    if not 2 <= n <= TWO_BLOCK_MAX_N:
        raise ValueError(f"n must be within 2..{TWO_BLOCK_MAX_N}, got {n}")
    if not 1 <= l <= n - 1:
        raise ValueError(f"l must be within 1..n-1, got {l}")
    value = Fraction(math.factorial(l) * math.factorial(n - l), math.factorial(n))
    assert value <= Fraction(1, n)
    return RationalBound.of(value)


def q_value(n: int, r: int, s: int) -> RationalBound:
    """Binomial ratio C(n/s, r/s)/C(n, r) * s/n for a divisor s of n and r."""
    if r < 1 or r > n // 2:
        raise ValueError(f"r must be within 1..n/2, got r={r}, n={n}")
    if s < 1 or n % s != 0 or r % s != 0:
        raise ValueError(f"s={s} must divide both n={n} and r={r}")
    value = Fraction(math.comb(n // s, r // s), math.comb(n, r)) * Fraction(s, n)
    return RationalBound.of(value)


def q_bound_case(n: int, r: int, s: int) -> str:
    """Which case of the per-divisor bound applies (guards are exclusive)."""
    if s == r:
        return CASE_FULL_R
    if 2 * s == r:
        return CASE_HALF_R
    if 3 * s <= r:
        return CASE_SMALL_S
    return CASE_UNCOVERED


def q_case_bound(n: int, r: int, s: int) -> RationalBound | None:
    """The case bound for q(n, r, s), or None when no case guard applies."""
    case = q_bound_case(n, r, s)
    if case == CASE_FULL_R:
        return RationalBound.of(Fraction(2, n * (n - 1)))
    if case == CASE_HALF_R:
        return RationalBound.of(Fraction(6, (n - 1) * (n - 2) * (n - 3)))
    if case == CASE_SMALL_S:
        return RationalBound.of(Fraction(1, n * s * s))
    return None


def q_bound_check(n: int, r: int, s: int) -> bool | None:
    """Exact comparison of q(n, r, s) against its case bound.

    Returns True/False for covered cases and None when the divisor falls in
    the uncovered gap between r/3 and r/2.
    """
    if n < 4:
        raise ValueError(f"bound cases need n >= 4, got {n}")
    bound = q_case_bound(n, r, s)
    if bound is None:
        return None
    return q_value(n, r, s).value <= bound.value


def eq2_bound(n: int, r: int) -> RationalBound:
    """Soundness bound for the randomized circle protocol: 1/n plus the
    per-divisor terms q(n, r, s) over all common divisors s >= 2 of n and r."""
    if not 1 <= r <= n // 2:
        raise ValueError(f"r must be within 1..n/2, got r={r}, n={n}")
    total = Fraction(1, n)
    for s in range(2, r + 1):
        if n % s == 0 and r % s == 0:
            total += q_value(n, r, s).value
    return RationalBound.of(total)


class BaselAsymptote(NamedTuple):
    value: float  # pi^2 / (6 n)
    loose: float  # 1.7 / n


def basel_asymptote(n: int) -> BaselAsymptote:
    """Leading asymptotic pi^2/(6n) with the looser 1.7/n companion."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return BaselAsymptote(math.pi**2 / (6 * n), 1.7 / n)


def inverse_square_tail_bracket(s_max: int) -> tuple[float, float]:
    """Rigorous bracket for sum_{s>=2} 1/s^2 = pi^2/6 - 1.

    The partial sum through s_max plus the integral tail bounds
    1/(s_max+1) < tail < 1/s_max gives an interval of width ~1/s_max^2.
    """
    if s_max < 2:
        raise ValueError("need at least the s=2 term")
    partial = math.fsum(1.0 / (s * s) for s in range(2, s_max + 1))
    return (partial + 1.0 / (s_max + 1), partial + 1.0 / s_max)


def symmetric_projector(dim: int, n: int) -> np.ndarray:
    """Dense projector onto the permutation-symmetric subspace of n registers.

    Averages the n! register-permutation operators; the trace equals
    C(dim+n-1, n), the dimension of the symmetric subspace.
    """
    if dim < 1 or n < 1:
        raise ValueError("dim and n must be positive")
    if n > SYM_ENUM_MAX_N:
        raise CapExceededError(f"projector build capped at n={SYM_ENUM_MAX_N}")
    space = dim**n
    if space > PROJECTOR_MAX_DIM:
        raise CapExceededError(
            f"dense projector capped at dim^n={PROJECTOR_MAX_DIM}, got {space}"
        )
    flat = np.arange(space).reshape((dim,) * n)
    proj = np.zeros((space, space), dtype=complex)
    eye = np.arange(space)
    for images in _lex_permutations(range(n)):
        target = flat.transpose(images).ravel()
        proj[target, eye] += 1.0
    return proj / math.factorial(n)


def ps_lower_bound(inst: QsiInstance) -> float:
    """Average over all permutations of the squared Gram-entry products.

    Equals the overlap of the instance's product state with the symmetric
    subspace, computed from the n x n Gram matrix only.
    """
    n = inst.n
    if n > SYM_ENUM_MAX_N:
        raise CapExceededError(f"permutation average capped at n={SYM_ENUM_MAX_N}")
    g2 = [tuple(float(v) for v in row) for row in np.abs(inst.gram()) ** 2]
    total = 0.0
    for images in _lex_permutations(range(n)):
        term = 1.0
        for i, j in enumerate(images):
            term *= g2[i][j]
            if term == 0.0:
                break
        total += term
    return total / math.factorial(n)


@dataclass(frozen=True)
class GapReport:
    """Distinguishability check for the two-sided-error setting on two states."""

    trace_dist: float
    completeness_error: float
    soundness_error: float
    error_sum: float
    achieves_lower_bound: bool


def two_sided_gap_check(atol: float = 1e-10) -> GapReport:
    """Check that the swap test saturates the trace-distance error bound.

    Mixes the two equal qubit pairs against the two orthogonal hadamard-basis
    pairs: the ensembles sit at trace distance 1/2, forcing completeness plus
    soundness error of at least 1/2 for any test, and the swap test attains
    (0, 1/2) exactly.
    """
    zero, one = basis_state(2, 0), basis_state(2, 1)
    plus = PureState.from_unnormalized([1, 1])
    minus = PureState.from_unnormalized([1, -1])

    rho_equal = mixture([(0.5, tensor([zero, zero])), (0.5, tensor([one, one]))])
    rho_orth = mixture([(0.5, tensor([plus, minus])), (0.5, tensor([minus, plus]))])
    dist = trace_distance(rho_equal, rho_orth)

    completeness = max(
        1.0 - run_circuit(TestKind.SWAP, QsiInstance((zero, zero))).p_equal,
        1.0 - run_circuit(TestKind.SWAP, QsiInstance((one, one))).p_equal,
    )
    soundness = max(
        run_circuit(TestKind.SWAP, QsiInstance((plus, minus))).p_equal,
        run_circuit(TestKind.SWAP, QsiInstance((minus, plus))).p_equal,
    )
    error_sum = completeness + soundness
    achieves = abs(dist - 0.5) <= atol and abs(error_sum - 0.5) <= atol
    return GapReport(dist, completeness, soundness, error_sum, achieves)
