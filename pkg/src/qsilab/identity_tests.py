"""The four identity tests: swap, cyclic-shift (circle), full-permutation, and
even-permutation (alternation).

Each test is available two ways. `run_circuit` simulates the five-step
procedure densely: prepare control |0> (x) states, Fourier-transform the
control, apply the controlled register permutation, invert the transform, and
measure the control, where outcome 0 means EQUAL. `equal_prob_formula`
evaluates the same EQUAL probability from the n x n Gram matrix as the group
average of inner-product products, which never touches a dim^n-sized object.
For promise-structured instances `equal_prob_rational` gives the probability
as an exact fraction (stabilizer count over group order).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import reduce
from typing import NamedTuple

import numpy as np

from .instances import Alignment, QsiInstance
from .limits import (
    CIRCLE_CIRCUIT_MAX_N,
    CIRCLE_FORMULA_MAX_N,
    PERM_CIRCUIT_MAX_N,
    SYM_ENUM_MAX_N,
    CapExceededError,
    max_amplitudes,
)
from .permgroup import Permutation, cycle_power, perm_table, sign_table
from .qmath import JointState, dft, measure_first_register

#: Imaginary parts of the group-averaged Gram sum above this are a bug.
FORMULA_IMAG_ATOL = 1e-10

_FORMULA_CHUNK = 200_000


class TestKind(Enum):
    SWAP = "swap"
    CIRCLE = "circle"
    PERMUTATION = "permutation"
    ALTERNATION = "alternation"


@dataclass(frozen=True)
class TestResult:
    """Outcome of one circuit simulation.

    p_equal is the probability of control outcome 0; post_equal holds the
    renormalized content registers after that outcome (None if unreachable).
    """

    p_equal: float
    post_equal: JointState | None
    outcome_distribution: tuple[tuple[int, float], ...]


def _check_kind_n(kind: TestKind, n: int) -> None:
    if kind is TestKind.SWAP:
        if n != 2:
            raise ValueError(f"swap test needs exactly 2 states, got {n}")
        return
    if n < 2:
        raise ValueError(f"{kind.value} test needs at least 2 states, got {n}")
    if kind is TestKind.CIRCLE:
        if n > CIRCLE_FORMULA_MAX_N:
            raise CapExceededError(
                f"circle control group capped at n={CIRCLE_FORMULA_MAX_N}, got {n}"
            )
    elif n > SYM_ENUM_MAX_N:
        raise CapExceededError(
            f"{kind.value} group enumeration capped at n={SYM_ENUM_MAX_N}, got {n}"
        )


def _group_rows(kind: TestKind, n: int) -> np.ndarray:
    """One-line rows of the control group, identity row first."""
    _check_kind_n(kind, n)
    if kind is TestKind.SWAP:
        return np.array([[1, 2], [2, 1]], dtype=np.int8)
    if kind is TestKind.CIRCLE:
        base = np.arange(n)
        return np.stack([(base + k) % n + 1 for k in range(n)]).astype(np.int8)
    if kind is TestKind.PERMUTATION:
        return perm_table(n)
    return perm_table(n)[sign_table(n) == 1]


def control_group(kind: TestKind, n: int) -> list[Permutation]:
    """The permutations applied under control, element 0 always the identity."""
    if kind is TestKind.CIRCLE:
        _check_kind_n(kind, n)
        return [cycle_power(n, k) for k in range(n)]
    return [Permutation(tuple(int(v) for v in row)) for row in _group_rows(kind, n)]


def _circuit_cap(kind: TestKind, n: int, dim: int, group_size: int) -> None:
    if kind in (TestKind.PERMUTATION, TestKind.ALTERNATION) and n > PERM_CIRCUIT_MAX_N:
        raise CapExceededError(
            f"{kind.value} circuit capped at n={PERM_CIRCUIT_MAX_N}, got {n}"
        )
    if kind is TestKind.CIRCLE and n > CIRCLE_CIRCUIT_MAX_N:
        raise CapExceededError(
            f"circle circuit capped at n={CIRCLE_CIRCUIT_MAX_N}, got {n}"
        )
    total = group_size * dim**n
    budget = max_amplitudes()
    if total > budget:
        raise CapExceededError(
            f"circuit needs {total} amplitudes, budget is {budget} (QSI_MAX_AMPS)"
        )


def run_circuit(kind: TestKind, inst: QsiInstance) -> TestResult:
    """Dense simulation of the identity test; works on arbitrary states."""
    n, d = inst.n, inst.dim
    group = control_group(kind, n)
    size = len(group)
    _circuit_cap(kind, n, d, size)

    content = reduce(np.kron, (s.amps for s in inst.states)).reshape((d,) * n)
    joint = np.zeros((size,) + (d,) * n, dtype=complex)
    joint[0] = content

    fourier = dft(size)
    joint = np.tensordot(fourier, joint, axes=(1, 0))
    for i, p in enumerate(group):
        # register m receives the state formerly at p(m): coordinate axes
        # permute by the one-line images
        axes = [v - 1 for v in p.images]
        joint[i] = joint[i].transpose(axes).copy()
    joint = np.tensordot(fourier.conj().T, joint, axes=(1, 0))

    measured = measure_first_register(JointState((size,) + (d,) * n, joint.ravel()))
    distribution = tuple((outcome, prob) for outcome, prob, _ in measured)
    p_equal = 0.0
    post_equal = None
    for outcome, prob, post in measured:
        if outcome == 0:
            p_equal = prob
            content_amps = post.amps.reshape(size, -1)[0]
            post_equal = JointState((d,) * n, content_amps)
            break
    return TestResult(p_equal, post_equal, distribution)


def equal_prob_formula(kind: TestKind, inst: QsiInstance) -> float:
    """EQUAL probability as the group average of Gram-entry products.

    Accepts arbitrary (including unstructured) instances; the group is closed
    under inverses so the averaged sum is real up to float error.
    """
    n = inst.n
    rows = _group_rows(kind, n)
    gram = inst.gram()
    cols = np.arange(n)
    total = 0.0 + 0.0j
    for start in range(0, len(rows), _FORMULA_CHUNK):
        idx = rows[start : start + _FORMULA_CHUNK].astype(np.intp) - 1
        total += gram[cols[None, :], idx].prod(axis=1).sum()
    p = total / len(rows)
    if abs(p.imag) > FORMULA_IMAG_ATOL:
        raise ArithmeticError(f"group average has imaginary part {p.imag:.3g}")
    return float(p.real)


def equal_prob_rational(kind: TestKind, inst: QsiInstance) -> Fraction:
    """Exact EQUAL probability for a promise-structured instance.

    Each group element contributes 1 when it setwise-stabilizes every block
    and 0 otherwise, so the probability is stabilizer count / group order.
    """
    if inst.partition is None:
        raise ValueError("exact probability needs a promise-structured instance")
    n = inst.n
    rows = _group_rows(kind, n)
    labels = np.array(inst.partition.labels())
    stabilizes = (labels[rows.astype(np.intp) - 1] == labels[np.newaxis, :]).all(axis=1)
    return Fraction(int(stabilizes.sum()), len(rows))


class RepetitionSet(NamedTuple):
    """Cyclic shifts that map the alignment onto itself."""

    shifts: frozenset[int]
    s: int
    k: int


def repetition_set(a: Alignment) -> RepetitionSet:
    """Shifts preserving the alignment, their count s, and the cycle size n/s."""
    if not 1 <= a.r <= a.n - 1:
        raise ValueError("alignment must be a proper nonempty subset")
    members = a.members
    shifts = frozenset(
        shift
        for shift in range(a.n)
        if {(i - 1 + shift) % a.n + 1 for i in members} == members
    )
    s = len(shifts)
    return RepetitionSet(shifts, s, a.n // s)
