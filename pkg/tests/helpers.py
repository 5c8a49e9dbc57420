"""Shared builders for the test suite."""

import numpy as np

from cascadenet.network import BeamSplitter, ChannelSpec, Coupling, NetworkSpec, NodeSpec, PhaseShift, StageMap


def random_density(dim, rng, rank=None):
    rank = rank or dim
    x = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = x @ x.conj().T
    return rho / np.trace(rho)


def random_hermitian_unit_trace(dim, rng):
    """Hermitian, unit trace, not necessarily positive."""
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = x + x.conj().T
    return h - (np.trace(h) - 1) * np.eye(dim) / dim


def random_network(rng, max_nodes=3, max_channels=3, max_occupation=1.0, cavity_dim=3):
    M = int(rng.integers(2, max_nodes + 1))
    K = int(rng.integers(1, max_channels + 1))
    nodes = []
    for i in range(M):
        chosen = [k for k in range(1, K + 1) if rng.random() < 0.6] or [int(rng.integers(1, K + 1))]
        couplings = tuple(Coupling(k, complex(rng.normal(), rng.normal())) for k in chosen)
        if rng.random() < 0.5:
            nodes.append(NodeSpec.qubit(i + 1, couplings))
        else:
            nodes.append(NodeSpec.cavity(i + 1, cavity_dim, couplings))
    channels = tuple(ChannelSpec(k + 1, float(rng.uniform(0, max_occupation))) for k in range(K))
    stages = []
    for m in range(1, M):
        elements = []
        for _ in range(int(rng.integers(0, 4))):
            if K >= 2 and rng.random() < 0.6:
                a, b = rng.choice(np.arange(1, K + 1), size=2, replace=False)
                elements.append(BeamSplitter(int(a), int(b), float(rng.uniform(0, 1))))
            else:
                elements.append(PhaseShift(int(rng.integers(1, K + 1)), float(rng.uniform(0, 2 * np.pi))))
        stages.append(StageMap(m, tuple(elements)))
    return NetworkSpec(tuple(nodes), channels, tuple(stages), rate=float(rng.uniform(0.5, 2.0)))
