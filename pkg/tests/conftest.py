"""Shared builders for the test suite."""

import numpy as np

from qsilab.instances import build_instance
from qsilab.permgroup import Partition


def two_block(n: int, l: int, dim: int = 2, rotation=None):
    """Canonical two-block instance: first l indices equal, rest orthogonal."""
    part = Partition.of([list(range(1, l + 1)), list(range(l + 1, n + 1))])
    return build_instance(part, dim, rotation)


def yes_instance(n: int, dim: int = 2):
    return build_instance(Partition.of([list(range(1, n + 1))]), dim)


def all_orthogonal(n: int):
    return build_instance(Partition.of([[i] for i in range(1, n + 1)]), dim=n)


def random_psd_density(dim: int, rng: np.random.Generator):
    """Random density matrix from a Gaussian square root."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = a @ a.conj().T
    from qsilab.qmath import DensityMatrix

    return DensityMatrix(m / np.trace(m).real)
