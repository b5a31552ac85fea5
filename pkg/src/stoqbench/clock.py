"""Clock construction: compile a verifier circuit into a local Hamiltonian.

The compiled register holds the verifier's work qubits (input, witness,
|0> ancillas, |+> ancillas, in that order) followed by L+2 clock qubits
in unary: clock state j has clock bits 0..j set.  Projector families
pin the initial conditions, the gate-by-gate propagation, and (via a
small perturbation or an extra 6-SAT projector) the final measurement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ops import Gate, LocalOperator, dense_limit
from .instances import LhMinInstance, StoqSatInstance
from .circuits import VerifierCircuit, acceptance_probability, initial_state

_KET0 = np.array([[1.0, 0.0], [0.0, 0.0]])
_KET1 = np.array([[0.0, 0.0], [0.0, 1.0]])
_PLUS = np.array([[0.5, 0.5], [0.5, 0.5]])
_RAISE = np.array([[0.0, 0.0], [1.0, 0.0]])  # |1><0|


def local_term(support, factors) -> np.ndarray:
    """Dense block on sorted ``support`` from factor matrices.

    ``factors`` is a list of (qubits, matrix) pieces; uncovered qubits
    get the identity.  Supports multi-qubit factors on arbitrary subsets.
    """
    support = tuple(sorted(support))
    pos = {q: i for i, q in enumerate(support)}
    k = len(support)
    dim = 2**k
    covered = set()
    pieces = []
    for qubits, mat in factors:
        bits = [pos[q] for q in qubits]
        covered.update(bits)
        pieces.append((bits, np.asarray(mat, dtype=float)))
    free = [i for i in range(k) if i not in covered]
    out = np.zeros((dim, dim))
    for a in range(dim):
        for b in range(dim):
            if any(((a >> i) & 1) != ((b >> i) & 1) for i in free):
                continue
            val = 1.0
            for bits, mat in pieces:
                ia = sum(((a >> bit) & 1) << t for t, bit in enumerate(bits))
                ib = sum(((b >> bit) & 1) << t for t, bit in enumerate(bits))
                val *= mat[ia, ib]
                if val == 0.0:
                    break
            out[a, b] = val
    return out


def gate_matrix(gate: Gate) -> np.ndarray:
    """Permutation matrix of a gate on its own qubits (sorted order)."""
    qubits = tuple(sorted(gate.qubits))
    pos = {q: i for i, q in enumerate(qubits)}
    dim = 2 ** len(qubits)
    mat = np.zeros((dim, dim))
    for a in range(dim):
        z = 0
        for q, i in pos.items():
            z |= ((a >> i) & 1) << q
        img = gate.apply(z)
        b = 0
        for q, i in pos.items():
            b |= ((img >> q) & 1) << i
        mat[b, a] = 1.0
    return mat


@dataclass(frozen=True)
class ClockInstance:
    circuit: VerifierCircuit
    x: int
    init_x: tuple
    init_0: tuple
    init_plus: tuple
    prop: tuple
    meas: LocalOperator
    metadata: dict = field(default_factory=dict, hash=False)

    @property
    def L(self) -> int:
        return self.circuit.num_gates

    @property
    def work_qubits(self) -> int:
        return self.circuit.total_qubits

    @property
    def clock_base(self) -> int:
        return self.work_qubits

    @property
    def N(self) -> int:
        return self.work_qubits + self.L + 2

    def all_projectors(self) -> tuple:
        return self.init_x + self.init_0 + self.init_plus + self.prop + (self.meas,)

    def hamiltonian(self) -> LhMinInstance:
        """H6 = sum of (I - Pi) over init and prop families."""
        terms = []
        for p in self.init_x + self.init_0 + self.init_plus + self.prop:
            eye = np.eye(p.block.shape[0])
            terms.append(LocalOperator(p.support, eye - p.block, tag="I-" + p.tag))
        return LhMinInstance(self.N, tuple(terms), 0.0, 1.0,
                             metadata={"kind": "clock", **self.metadata})


def compile_circuit(v: VerifierCircuit, x: int = 0) -> ClockInstance:
    """Emit the init / prop / meas projector families for verifier ``v``."""
    if v.num_gates < 1:
        raise ValueError("degenerate circuit: need at least one gate")
    if not 0 <= x < 2**v.n:
        raise ValueError("input string out of range")
    L = v.num_gates
    base = v.total_qubits  # first clock qubit
    c = lambda j: base + j

    def init_family(first_qubit, count, state_proj, label):
        terms = []
        for j in range(count):
            q = first_qubit + j
            block = local_term(
                (q, c(0), c(1)),
                [((q,), state_proj(j)), ((c(0),), _KET1), ((c(1),), _KET0)],
            ) + local_term((q, c(0), c(1)),
                           [((c(0),), _KET1), ((c(1),), _KET1)])
            terms.append(LocalOperator(tuple(sorted((q, c(0), c(1)))), block,
                                       tag=f"{label}{j}"))
        return tuple(terms)

    init_x = init_family(
        0, v.n, lambda j: _KET1 if (x >> j) & 1 else _KET0, "init_x")
    init_0 = init_family(v.n + v.n_w, v.n_0, lambda j: _KET0, "init_0")
    init_plus = init_family(
        v.n + v.n_w + v.n_0, v.n_plus, lambda j: _PLUS, "init_plus")

    prop = []
    for j in range(1, L + 1):
        gate = v.gates[j - 1]
        gq = tuple(sorted(gate.qubits))
        u = gate_matrix(gate)
        support = tuple(sorted(set(gq) | {c(j - 1), c(j), c(j + 1)}))
        clock3 = (c(j - 1), c(j), c(j + 1))
        block = (
            0.5 * local_term(support, [((c(j - 1),), _KET1), ((c(j),), _KET1),
                                       ((c(j + 1),), _KET0)])
            + 0.5 * local_term(support, [((c(j - 1),), _KET1), ((c(j),), _KET0),
                                         ((c(j + 1),), _KET0)])
            + 0.5 * local_term(support, [((c(j - 1),), _KET1), ((c(j),), _RAISE),
                                         ((c(j + 1),), _KET0), (gq, u)])
            + 0.5 * local_term(support, [((c(j - 1),), _KET1), ((c(j),), _RAISE.T),
                                         ((c(j + 1),), _KET0), (gq, u.T)])
            + local_term(support, [((q,), _KET0) for q in clock3])
        )
        if j < L:
            block = block + local_term(support, [((q,), _KET1) for q in clock3])
        # the last prop term omits the all-ones clock piece: with it, the
        # configuration 1^(L+2) is invariant under every projector and the
        # zero eigenspace picks up 2^(work) spurious states; without it,
        # clock qubit L+1 stays pinned to 0 on the whole ground space
        prop.append(LocalOperator(support, block, tag=f"prop{j}"))

    pi_out = _PLUS if v.out_basis == "plus" else _KET0
    meas_support = tuple(sorted((0, c(L), c(L + 1))))
    meas_block = local_term(
        meas_support, [((0,), pi_out), ((c(L),), _KET1), ((c(L + 1),), _KET0)]
    ) + local_term(meas_support, [((c(L),), _KET0), ((c(L + 1),), _KET0)])
    meas = LocalOperator(meas_support, meas_block, tag="meas")

    return ClockInstance(
        circuit=v, x=x, init_x=init_x, init_0=init_0, init_plus=init_plus,
        prop=tuple(prop), meas=meas,
        metadata={"input": x, "L": L, "N": base + L + 2},
    )


def history_state(clock: ClockInstance, psi) -> np.ndarray:
    """Uniform superposition over the verifier's computational path."""
    v = clock.circuit
    psi = np.asarray(psi, dtype=float)
    work = initial_state(v, clock.x, psi)
    L = clock.L
    base = clock.clock_base
    state = np.zeros(2**clock.N)
    norm = 1.0 / math.sqrt(L + 1)
    clock_mask = 1 << base  # clock state j: bits base..base+j set
    dim_work = work.shape[0]
    idx = np.arange(dim_work)
    cur = work.copy()
    for j in range(L + 1):
        if j > 0:
            g = v.gates[j - 1]
            perm_cur = np.empty_like(cur)
            if g.kind == "X":
                perm = idx ^ (1 << g.qubits[0])
            elif g.kind == "CNOT":
                perm = idx ^ (((idx >> g.qubits[0]) & 1) << g.qubits[1])
            else:
                q0, q1, q2 = g.qubits
                perm = idx ^ ((((idx >> q0) & (idx >> q1)) & 1) << q2)
            perm_cur[perm] = cur
            cur = perm_cur
            clock_mask |= 1 << (base + j)
        state[idx + clock_mask] += norm * cur
    return state


def meas_expectation(clock: ClockInstance, psi) -> float:
    """<Phi|Pi_meas|Phi> for the history state of witness psi."""
    phi = history_state(clock, psi)
    sup, rest = _support_maps_cached(clock.meas.support, clock.N)
    total = 0.0
    for r in rest:
        idx = sup + r
        seg = phi[idx]
        total += float(seg @ clock.meas.block @ seg)
    return total


def _support_maps_cached(support, n):
    from .ops import _support_maps
    return _support_maps(support, n)


def check_history_invariants(clock: ClockInstance, psi, tol: float = 1e-10):
    """Residuals: |H6 phi| and the measurement identity of the history state."""
    phi = history_state(clock, psi)
    h = clock.hamiltonian().operator()
    from .ops import assemble_sparse
    resid = float(np.linalg.norm(assemble_sparse(h) @ phi))
    pr = acceptance_probability(clock.circuit, clock.x, psi)
    expect = 1.0 - (1.0 - pr) / (clock.L + 1)
    meas_err = abs(meas_expectation(clock, psi) - expect)
    return resid, meas_err


def default_delta(L: int) -> float:
    """Perturbation size policy: well inside the L^-3 validity window."""
    return min(1e-3, 1.0 / (100.0 * L**3))


def perturbed_hamiltonian(clock: ClockInstance, delta: float) -> LhMinInstance:
    """H~ = H6 + delta (I - Pi_meas); stoquastic by construction."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    h = clock.hamiltonian()
    eye = np.eye(clock.meas.block.shape[0])
    extra = LocalOperator(clock.meas.support,
                          delta * (eye - clock.meas.block), tag="delta-meas")
    return LhMinInstance(clock.N, h.terms + (extra,), h.lambda_yes, h.lambda_no,
                         metadata={**h.metadata, "delta": delta})


def predicted_min_eigenvalue(delta: float, L: int, max_pr: float) -> float:
    """First-order prediction delta (1 - max_pr) / (L + 1); O(delta^2) exact."""
    return delta * (1.0 - max_pr) / (L + 1)


def export_6sat(clock: ClockInstance, epsilon: float = None,
                eta_floor: float = 1e-9) -> StoqSatInstance:
    """All clock projectors as a stoquastic SAT instance.

    epsilon is measured spectrally at desk scale: M (1 - lambda_max(G)).
    A top eigenvalue at 1 marks a yes-instance, whose epsilon is moot;
    it is pinned to 1 so the instance still validates.
    """
    projectors = clock.all_projectors()
    m = len(projectors)
    meta = {"source_circuit": "clock", "input": clock.x, "L": clock.L,
            "epsilon_mode": "supplied"}
    if epsilon is None:
        if clock.N > dense_limit():
            raise ValueError(
                "dense limit exceeded: supply epsilon explicitly")
        from .ops import OperatorSum, assemble_dense
        g = OperatorSum(clock.N, projectors, (1.0 / m,) * m)
        lam = float(np.linalg.eigvalsh(assemble_dense(g))[-1])
        eps = m * (1.0 - lam)
        meta["lambda_max"] = lam
        meta["epsilon_spectral"] = eps
        if eps <= eta_floor:
            epsilon = 1.0  # yes-instance; epsilon plays no role
            meta["epsilon_mode"] = "spectral-yes"
        else:
            epsilon = min(1.0, eps)
            meta["epsilon_mode"] = "spectral"
    return StoqSatInstance(n=clock.N, epsilon=epsilon,
                           projectors=projectors, metadata=meta)
