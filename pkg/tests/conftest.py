import numpy as np
import pytest

from stoqbench import Gate, LocalOperator, StoqSatInstance, VerifierCircuit


def plus_block(k: int) -> np.ndarray:
    """|+..+><+..+| on k qubits."""
    dim = 2**k
    return np.full((dim, dim), 1.0 / dim)


def plus_instance(n: int, supports) -> StoqSatInstance:
    """Projectors |+..+><+..+| on the given supports; common invariant
    state |+>^n, so a yes-instance with top eigenvalue exactly 1."""
    projectors = tuple(
        LocalOperator(tuple(sorted(s)), plus_block(len(s)), tag=f"plus{s}")
        for s in supports
    )
    return StoqSatInstance(n=n, epsilon=0.5, projectors=projectors,
                           metadata={"source": "plus-fixture"})


@pytest.fixture
def xx_plus_circuit():
    """Two X gates on a single |+> ancilla; accepts with probability 1."""
    return VerifierCircuit(n=0, n_w=0, n_0=0, n_plus=1,
                           gates=(Gate("X", (0,)), Gate("X", (0,))))


@pytest.fixture
def rejecting_circuit():
    """Coherent classical circuit that outputs |1> on every input."""
    return VerifierCircuit(n=1, n_w=1, n_0=1, n_plus=0,
                           gates=(Gate("X", (2,)), Gate("CNOT", (2, 0)),
                                  Gate("X", (2,)), Gate("X", (0,))),
                           out_basis="zero")


def random_stoquastic_block(rng, k: int) -> np.ndarray:
    """Symmetric block with non-positive off-diagonal entries."""
    dim = 2**k
    m = -np.abs(rng.normal(size=(dim, dim)))
    m = (m + m.T) / 2.0
    d = rng.normal(size=dim)
    for i in range(dim):
        m[i, i] = d[i]
    return m
