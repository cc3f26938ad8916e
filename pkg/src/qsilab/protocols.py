"""Semi-classical identity-testing protocols.

Two protocols are implemented, each as a sampled run with measurement
collapse and as an exact-probability evaluator:

* sequential random swap on three states: m rounds of swap tests on
  classically chosen register pairs, collapsing the joint state between
  rounds;
* randomized circle: one uniformly random relabeling of the states followed
  by a single cyclic-shift test.

Exact evaluators use rational arithmetic end to end; Monte Carlo trials are
independent and seeded per trial, so runs are reproducible and order-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from itertools import combinations
from typing import Callable, Literal, NamedTuple

import numpy as np

from .identity_tests import TestKind, equal_prob_formula, run_circuit
from .instances import QsiInstance, Verdict, verify_promise
from .limits import SUBSET_ENUM_MAX, CapExceededError, max_amplitudes
from .permgroup import Partition

Policy = Literal["uniform", "canonical"]

_PAIRS = ((1, 2), (1, 3), (2, 3))

#: Table capacity for the vectorized alignment sweep (2^n masks).
_MASK_TABLE_MAX_N = 24


@dataclass(frozen=True)
class ProtocolOutcome:
    """Verdict of one sampled protocol run plus its full transcript."""

    verdict: str  # "YES" or "NO"
    rounds_executed: int
    transcript: tuple[tuple[tuple[int, int], int], ...]  # ((i, j), outcome)


@dataclass(frozen=True)
class McEstimate:
    trials: int
    successes: int
    p_hat: float
    ci95: tuple[float, float]


class SrsClosedForm(NamedTuple):
    """Closed-form round-k quantities for the sequential swap protocol."""

    p: Fraction  # conditional pass probability of round k
    a: Fraction  # coefficient parameter of the post-round state
    q: Fraction  # cumulative pass probability through round k


def srs_closed_form(k: int) -> SrsClosedForm:
    """p_k = 1 - 6/(4^k + 8), the state coefficient a_k, and q_k = prod p_j."""
    if k < 1:
        raise ValueError("round index must be at least 1")
    p = 1 - Fraction(6, 4**k + 8)
    if k % 2 == 1:
        a = Fraction(2, 3) * (4 ** ((k - 1) // 2) - 1)
    else:
        a = Fraction(1, 3) * (4 ** (k // 2) - 1)
    q = Fraction(1, 3) + Fraction(2, 3 * 4**k)
    return SrsClosedForm(p, a, q)


def _require_promise_three(inst: QsiInstance) -> None:
    if inst.n != 3:
        raise ValueError(f"protocol is defined on exactly 3 states, got {inst.n}")
    if verify_promise(inst) is Verdict.VIOLATED:
        raise ValueError("instance violates the equal-or-orthogonal promise")


def _pair_swap_axes(pair: tuple[int, int], n_regs: int = 3) -> list[int]:
    axes = list(range(n_regs))
    i, j = pair
    axes[i - 1], axes[j - 1] = axes[j - 1], axes[i - 1]
    return axes


def _swap_test_branches(
    state: np.ndarray, d: int, pair: tuple[int, int]
) -> tuple[float, np.ndarray, np.ndarray]:
    """Measurement branches of one controlled-swap test on two registers.

    Appending a fresh control qubit, Hadamard-conjugating the controlled swap
    and measuring the control leaves (state +/- swapped)/2 on the content
    registers; returns (p_equal, renormalized equal branch, renormalized
    not-equal branch), with None-like zero vectors avoided by construction.
    """
    cube = state.reshape((d, d, d))
    swapped = cube.transpose(_pair_swap_axes(pair)).reshape(-1)
    equal_branch = (state + swapped) / 2.0
    other_branch = (state - swapped) / 2.0
    p0 = float(np.vdot(equal_branch, equal_branch).real)
    if p0 > 0.0:
        equal_branch = equal_branch / np.sqrt(p0)
    if p0 < 1.0:
        other_branch = other_branch / np.sqrt(max(1.0 - p0, 0.0))
    return p0, equal_branch, other_branch


def srs_sample(inst: QsiInstance, m: int, rng: np.random.Generator) -> ProtocolOutcome:
    """One sampled run of the m-round sequential swap protocol.

    Tracks the joint pure state of the three content registers; every round
    runs the swap-test circuit on the chosen pair, samples the control
    measurement, collapses, and redraws the next pair uniformly from the
    leftover register plus one of the two just-tested registers.
    """
    if m < 1:
        raise ValueError("round count must be at least 1")
    _require_promise_three(inst)
    d = inst.dim
    state = reduce(np.kron, (s.amps for s in inst.states))
    pair = _PAIRS[int(rng.integers(3))]
    transcript: list[tuple[tuple[int, int], int]] = []
    for round_no in range(1, m + 1):
        p0, equal_branch, other_branch = _swap_test_branches(state, d, pair)
        outcome = 0 if rng.random() < p0 else 1
        transcript.append((pair, outcome))
        if outcome == 1:
            return ProtocolOutcome("NO", round_no, tuple(transcript))
        state = equal_branch
        if round_no < m:
            leftover = ({1, 2, 3} - set(pair)).pop()
            kept = pair[int(rng.integers(2))]
            pair = (min(leftover, kept), max(leftover, kept))
    return ProtocolOutcome("YES", m, tuple(transcript))


def _block_labels_three(inst: QsiInstance) -> tuple[int, ...]:
    if inst.partition is None:
        raise ValueError("exact evaluation needs the promise partition")
    return inst.partition.labels()


def _exact_initial(labels: tuple[int, ...], b: int) -> dict[int, Fraction]:
    idx = labels[0] * b * b + labels[1] * b + labels[2]
    return {idx: Fraction(1)}


def _exact_swap(state: dict[int, Fraction], b: int, pair: tuple[int, int]) -> dict[int, Fraction]:
    i, j = pair
    out: dict[int, Fraction] = {}
    for idx, amp in state.items():
        digits = [idx // (b * b) % b, idx // b % b, idx % b]
        digits[i - 1], digits[j - 1] = digits[j - 1], digits[i - 1]
        key = digits[0] * b * b + digits[1] * b + digits[2]
        out[key] = out.get(key, Fraction(0)) + amp
    return out


def _exact_add(s1: dict[int, Fraction], s2: dict[int, Fraction]) -> dict[int, Fraction]:
    out = dict(s1)
    for key, amp in s2.items():
        val = out.get(key, Fraction(0)) + amp
        if val:
            out[key] = val
        else:
            out.pop(key, None)
    return out


def _exact_norm2(state: dict[int, Fraction]) -> Fraction:
    return sum((amp * amp for amp in state.values()), Fraction(0))


def srs_exact(inst: QsiInstance, m: int, policy: Policy = "uniform") -> Fraction:
    """Exact YES probability of the m-round sequential swap protocol.

    Branches exhaustively over the classical pair choices and measurement
    outcomes, carrying unnormalized joint states with rational amplitudes;
    the promise partition fixes the Gram structure, so the canonical basis
    embedding is used regardless of any rotation on the stored states.
    """
    if m < 1:
        raise ValueError("round count must be at least 1")
    _require_promise_three(inst)
    labels = _block_labels_three(inst)
    b = max(labels) + 1
    if policy not in ("uniform", "canonical"):
        raise ValueError(f"unknown policy {policy!r}")

    def recurse(state: dict[int, Fraction], pair: tuple[int, int], rounds: int) -> Fraction:
        norm2 = _exact_norm2(state)
        merged = _exact_add(state, _exact_swap(state, b, pair))
        pass_prob = _exact_norm2(merged) / (4 * norm2)
        if pass_prob == 0:
            return Fraction(0)
        if rounds == 1:
            return pass_prob
        leftover = ({1, 2, 3} - set(pair)).pop()
        if policy == "canonical":
            nxt = (min(leftover, pair[1]), max(leftover, pair[1]))
            return pass_prob * recurse(merged, nxt, rounds - 1)
        total = Fraction(0)
        for kept in pair:
            nxt = (min(leftover, kept), max(leftover, kept))
            total += recurse(merged, nxt, rounds - 1)
        return pass_prob * total / 2

    initial = _exact_initial(labels, b)
    return sum((recurse(initial, pair, m) for pair in _PAIRS), Fraction(0)) / 3


class SrsRound(NamedTuple):
    pair: tuple[int, int]
    pass_prob: Fraction
    state: dict[int, int]  # unnormalized integer amplitudes, flat index -> coeff


def srs_canonical_trace(
    inst: QsiInstance, m: int, first_pair: tuple[int, int] = (1, 2)
) -> list[SrsRound]:
    """All-EQUAL branch under the keep-the-second-register policy.

    Returns, per round, the tested pair, the conditional pass probability,
    and the unnormalized post-round state with integer coefficients (the
    halving normalization is dropped, which only rescales).
    """
    if m < 1:
        raise ValueError("round count must be at least 1")
    _require_promise_three(inst)
    labels = _block_labels_three(inst)
    b = max(labels) + 1
    state = {k: Fraction(v) for k, v in _exact_initial(labels, b).items()}
    pair = first_pair
    rounds: list[SrsRound] = []
    for _ in range(m):
        norm2 = _exact_norm2(state)
        state = _exact_add(state, _exact_swap(state, b, pair))
        pass_prob = _exact_norm2(state) / (4 * norm2)
        rounds.append(SrsRound(pair, pass_prob, {k: int(v) for k, v in state.items()}))
        leftover = ({1, 2, 3} - set(pair)).pop()
        pair = (min(leftover, pair[1]), max(leftover, pair[1]))
    return rounds


def _permuted_instance(inst: QsiInstance, tau: np.ndarray) -> QsiInstance:
    """Relabel states so position j holds the state formerly at tau[j]."""
    states = tuple(inst.states[int(t)] for t in tau)
    partition = None
    if inst.partition is not None:
        old_labels = inst.partition.labels()
        new_labels = [old_labels[int(t)] for t in tau]
        blocks: dict[int, set[int]] = {}
        for pos, lab in enumerate(new_labels, start=1):
            blocks.setdefault(lab, set()).add(pos)
        partition = Partition(
            inst.n, tuple(frozenset(b) for b in blocks.values())
        )
    return QsiInstance(states, partition)


def rcir_sample(inst: QsiInstance, rng: np.random.Generator) -> str:
    """One run of the randomized circle protocol: YES on EQUAL, NO otherwise.

    Applies a uniformly random relabeling, then runs the cyclic-shift test;
    the circuit is simulated when it fits the amplitude budget, otherwise the
    outcome is an exact Bernoulli draw from the closed-form probability.
    """
    if verify_promise(inst) is Verdict.VIOLATED:
        raise ValueError("instance violates the equal-or-orthogonal promise")
    tau = rng.permutation(inst.n)
    permuted = _permuted_instance(inst, tau)
    n, d = permuted.n, permuted.dim
    if n <= 10 and n * d**n <= max_amplitudes():
        p_equal = run_circuit(TestKind.CIRCLE, permuted).p_equal
    else:
        p_equal = equal_prob_formula(TestKind.CIRCLE, permuted)
    return "YES" if rng.random() < p_equal else "NO"


def _divisors_below(n: int) -> list[int]:
    return [d for d in range(1, n) if n % d == 0]


@lru_cache(maxsize=None)
def _alignment_rep_sums(n: int) -> tuple[int, ...]:
    """Sum over all r-subsets of the repetition number, indexed by r.

    Enumerates every subset of the n-cycle as a bitmask and finds its minimal
    rotation period among the divisors of n; vectorized so the n=24 table
    (16.7M masks) builds in seconds.
    """
    masks = np.arange(1 << n, dtype=np.uint32)
    sizes = np.bitwise_count(masks).astype(np.uint8)
    full = np.uint32((1 << n) - 1)
    period = np.full(masks.shape, n, dtype=np.uint8)
    for d in _divisors_below(n):
        rotated = ((masks << np.uint32(d)) | (masks >> np.uint32(n - d))) & full
        np.minimum(period, np.where(rotated == masks, np.uint8(d), np.uint8(n)), out=period)
    reps = n // period
    # counts fit well under 2**53, so float64 bin sums are exact
    sums = np.bincount(sizes, weights=reps.astype(np.float64), minlength=n + 1)
    return tuple(int(v) for v in sums)


def _rep_number_mask(mask: int, n: int) -> int:
    full = (1 << n) - 1
    for d in _divisors_below(n):
        if ((mask << d) | (mask >> (n - d))) & full == mask:
            return n // d
    return 1


def rcir_exact(n: int, r: int) -> Fraction:
    """Exact soundness error of the randomized circle protocol on a two-block
    instance with r states in the distinguished block.

    Averages s(A)/n over all r-subsets A of the cycle, where s(A) counts the
    cyclic shifts preserving A.
    """
    if not 1 <= r <= n - 1:
        raise ValueError(f"r must be within 1..n-1, got r={r}, n={n}")
    count = math.comb(n, r)
    if count > SUBSET_ENUM_MAX:
        raise CapExceededError(f"C({n},{r}) = {count} subsets exceeds {SUBSET_ENUM_MAX}")
    if n <= _MASK_TABLE_MAX_N:
        total = _alignment_rep_sums(n)[r]
    else:
        total = 0
        for combo in combinations(range(n), r):
            mask = 0
            for i in combo:
                mask |= 1 << i
            total += _rep_number_mask(mask, n)
    return Fraction(total, count * n)


def rcir_exact_for_instance(inst: QsiInstance) -> Fraction:
    """Worst-case exact soundness over two-block merges of the instance blocks.

    A multi-block promise instance is reduced to the two-block merge that
    maximizes the soundness error; requires a NO instance.
    """
    if inst.partition is None:
        raise ValueError("exact evaluation needs the promise partition")
    sizes = [len(b) for b in inst.partition.blocks]
    if len(sizes) < 2:
        raise ValueError("instance has a single block: it is a YES instance")
    if len(sizes) > 20:
        raise CapExceededError("too many blocks to enumerate two-block merges")
    achievable: set[int] = set()
    for pick in range(1, 1 << len(sizes)):
        r = sum(sz for i, sz in enumerate(sizes) if pick >> i & 1)
        if 1 <= r <= inst.n - 1:
            achievable.add(min(r, inst.n - r))
    return max(rcir_exact(inst.n, r) for r in sorted(achievable))


_WILSON_Z = 1.959963984540054  # two-sided 95%


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be positive")
    z2 = _WILSON_Z**2
    p = successes / trials
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = _WILSON_Z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials**2)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def mc_run(
    trial: Callable[[np.random.Generator], bool], trials: int, base_seed: int
) -> McEstimate:
    """Run independent trials with per-trial seed = base_seed XOR trial index."""
    if trials < 1:
        raise ValueError("trials must be positive")
    successes = 0
    for i in range(trials):
        rng = np.random.default_rng(base_seed ^ i)
        if trial(rng):
            successes += 1
    return McEstimate(trials, successes, successes / trials, wilson_interval(successes, trials))
