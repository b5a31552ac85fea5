"""Stoquastic and coherent-classical verifier circuits.

A verifier is a reversible circuit (X / CNOT / Toffoli) on four
registers, laid out low bits first: input |x>, witness, |0> ancillas,
|+> ancillas.  Acceptance projects the first qubit of the layout onto
|+> (stoquastic) or |0> (coherent classical).

This module also implements the reduction chain from a stoquastic
Hamiltonian to such a verifier: the shifted decomposition into
conjugated -|0..0><0..0| and -X(x)|0..0><0..0| pieces, the Toffoli-ladder
isometries that turn those observables into a single X measurement, and
the dyadic convex mixing of the resulting circuit family.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .ops import ETA, Gate, LocalOperator, circuit_permutation
from .instances import LhMinInstance, validate

CIRCUIT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class VerifierCircuit:
    n: int
    n_w: int
    n_0: int
    n_plus: int
    gates: tuple
    out_basis: str = "plus"  # plus = stoquastic, zero = coherent classical

    def __post_init__(self):
        gates = tuple(g if isinstance(g, Gate) else Gate(*g) for g in self.gates)
        if not gates:
            raise ValueError("circuit needs at least one gate")
        if self.out_basis not in ("plus", "zero"):
            raise ValueError("out_basis must be 'plus' or 'zero'")
        total = self.total_qubits
        for g in gates:
            if max(g.qubits) >= total:
                raise ValueError(f"gate {g} outside {total} qubits")
        object.__setattr__(self, "gates", gates)

    @property
    def total_qubits(self) -> int:
        return self.n + self.n_w + self.n_0 + self.n_plus

    @property
    def num_gates(self) -> int:
        return len(self.gates)

    def permutation(self) -> np.ndarray:
        ident = {q: q for q in range(self.total_qubits)}
        return circuit_permutation(self.gates, ident, 2**self.total_qubits)


def initial_state(v: VerifierCircuit, x: int, psi: np.ndarray) -> np.ndarray:
    """|x> (x) |psi> (x) |0..0> (x) |+..+> over the full register."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (2**v.n_w,):
        raise ValueError("witness dimension mismatch")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ValueError("witness not normalized")
    if not 0 <= x < 2**v.n:
        raise ValueError("input string out of range")
    total = v.total_qubits
    state = np.zeros(2**total)
    plus_amp = 2.0 ** (-v.n_plus / 2.0)
    plus_shift = v.n + v.n_w + v.n_0
    w_idx = np.arange(2**v.n_w)
    for p in range(2**v.n_plus):
        base = x | (p << plus_shift)
        state[base | (w_idx << v.n)] = psi * plus_amp
    return state


def _out_expectation(state: np.ndarray, out_basis: str) -> float:
    pairs = state.reshape(-1, 2)  # qubit 0 is the fastest index
    if out_basis == "zero":
        return float(np.sum(pairs[:, 0] ** 2))
    s = (pairs[:, 0] + pairs[:, 1]) / math.sqrt(2.0)
    return float(np.sum(s * s))


def acceptance_probability(v: VerifierCircuit, x: int, psi) -> float:
    """Pr(V; x, psi): simulate the permutation circuit, measure qubit 0."""
    state = initial_state(v, x, np.asarray(psi, dtype=float))
    perm = v.permutation()
    out = np.zeros_like(state)
    out[perm] = state
    return _out_expectation(out, v.out_basis)


def acceptance_operator(v: VerifierCircuit, x: int) -> np.ndarray:
    """Matrix A on the witness space with <psi|A|psi> = Pr(V; x, psi)."""
    if v.n_w > 12:
        raise ValueError("witness register too large for dense contraction")
    dim_w = 2**v.n_w
    perm = v.permutation()
    cols = np.zeros((2**v.total_qubits, dim_w))
    for w in range(dim_w):
        e = np.zeros(dim_w)
        e[w] = 1.0
        state = initial_state(v, x, e)
        cols[perm, w] = state
    half = cols.reshape(-1, 2, dim_w)
    if v.out_basis == "zero":
        proj = half[:, 0, :]
        return proj.T @ proj
    plus = (half[:, 0, :] + half[:, 1, :]) / math.sqrt(2.0)
    return plus.T @ plus


def max_acceptance(v: VerifierCircuit, x: int):
    """Best witness: top eigenpair of the acceptance operator."""
    a = acceptance_operator(v, x)
    evals, evecs = np.linalg.eigh(a)
    vec = evecs[:, -1]
    # Perron normalization: the maximizer can be chosen non-negative
    if vec[np.argmax(np.abs(vec))] < 0:
        vec = -vec
    return float(evals[-1]), vec


# ---------------------------------------------------------------------------
# Lemma-2 style decomposition


@dataclass(frozen=True)
class StoqPart:
    weight: float  # un-normalized, >= 0
    circuit: tuple  # Gate list U on the term's local qubits (0..k-1)
    kind: str  # "Z00" (-|0..0><0..0|) or "X0" (-X (x) |0..0><0..0|)
    support: tuple  # global qubits the part acts on


@dataclass(frozen=True)
class StoqDecomposition:
    gamma: float
    beta: float
    parts: tuple  # of (p_j, StoqPart) with sum p_j = 1

    def part_operator(self, part: StoqPart) -> np.ndarray:
        """Dense U_j H_j U_j^dag on the part's local space."""
        k = len(part.support)
        dim = 2**k
        h = np.zeros((dim, dim))
        if part.kind == "Z00":
            h[0, 0] = -1.0
        else:
            h[0, 1] = h[1, 0] = -1.0
        perm = circuit_permutation(part.circuit, {q: q for q in range(k)}, dim)
        pinv = np.argsort(perm)
        return h[np.ix_(pinv, pinv)]


def _x_circuit(x: int, k: int) -> tuple:
    """X gates preparing |x> from |0^k>."""
    return tuple(Gate("X", (i,)) for i in range(k) if (x >> i) & 1)


def _pair_circuit(x: int, y: int, k: int) -> tuple:
    """U with U|0^k> = |x> and U|10^(k-1)> = |y>, using X and CNOT only."""
    d = x ^ y
    if d == 0:
        raise ValueError("pair circuit needs x != y")
    b = (d & -d).bit_length() - 1  # lowest differing bit
    gates = []
    if b != 0:
        gates.append(Gate("CNOT", (0, b)))
    for j in range(k):
        if j != b and (d >> j) & 1:
            gates.append(Gate("CNOT", (b, j)))
    if not (d & 1):
        gates.append(Gate("CNOT", (b, 0)))
    gates.extend(_x_circuit(x, k))
    return tuple(gates)


def decompose_stoquastic(h: LhMinInstance, tol: float = ETA) -> StoqDecomposition:
    """gamma*H + beta*I as a convex combination of conjugated model terms.

    Every local term is shifted until entrywise non-positive, then its
    diagonal entries become Z00 parts and its off-diagonal pairs become
    X0 parts, with weights given by the entry magnitudes.
    """
    problems = validate(h)
    if problems:
        raise ValueError("not a valid stoquastic instance: " + "; ".join(problems))
    raw_parts = []
    shift_total = 0.0
    for term in h.terms:
        k = term.k
        block = np.array(term.block)
        shift = max(0.0, float(np.max(np.diag(block))))
        block = block - shift * np.eye(2**k)
        block[block > 0] = 0.0  # tolerance-level positives
        shift_total += shift
        for x in range(2**k):
            w = -float(block[x, x])
            if w > tol:
                raw_parts.append(StoqPart(w, _x_circuit(x, k), "Z00", term.support))
        for x in range(2**k):
            for y in range(x + 1, 2**k):
                w = -float(block[x, y])
                if w > tol:
                    raw_parts.append(
                        StoqPart(w, _pair_circuit(x, y, k), "X0", term.support))
    total = sum(p.weight for p in raw_parts)
    if total <= 0:
        raise ValueError("Hamiltonian is a multiple of the identity")
    gamma = 1.0 / total
    beta = -shift_total / total
    parts = tuple((p.weight / total, p) for p in raw_parts)
    return StoqDecomposition(gamma=gamma, beta=beta, parts=parts)


# ---------------------------------------------------------------------------
# Lemma-3 isometries


def zero_projector_isometry(k: int):
    """Toffoli ladder W with W^dag (X on the |+> ancilla) W = |0..0><0..0|.

    Registers: psi on qubits 0..k-1, |0> ancillas on k..2k-1, one |+>
    ancilla on 2k.  Returns (gates, n_0, n_plus, measured_qubit).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    plus = 2 * k
    gates = tuple(Gate("TOFFOLI", (j, plus, k + j)) for j in range(k))
    return gates, k, 1, plus


def x_projector_isometry(k: int):
    """Ladder W with W^dag (X on qubit 0) W = X (x) |0..0><0..0|^(k-1).

    Registers: psi on 0..k-1, |0> ancillas on k..2k-2.  Qubit 0 plays the
    role the |+> ancilla plays in the zero-projector ladder.  Returns
    (gates, n_0, n_plus, measured_qubit).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    gates = tuple(Gate("TOFFOLI", (j, 0, k + j - 1)) for j in range(1, k))
    return gates, k - 1, 0, 0


def _swap_gates(a: int, b: int):
    if a == b:
        return ()
    return (Gate("CNOT", (a, b)), Gate("CNOT", (b, a)), Gate("CNOT", (a, b)))


# ---------------------------------------------------------------------------
# Hamiltonian -> verifier


@dataclass(frozen=True)
class MixedVerifier:
    """Convex combination of stoquastic verifiers over a shared witness.

    The mixture weights are dyadic approximations realizable with
    ``selector_bits`` ancillas in |+>; the worst per-part weight error is
    recorded in metadata.
    """

    n_w: int
    parts: tuple  # of (p_j, VerifierCircuit)
    metadata: dict = field(default_factory=dict, hash=False)

    def acceptance_probability(self, x: int, psi) -> float:
        return sum(p * acceptance_probability(v, x, psi) for p, v in self.parts)

    def acceptance_operator(self, x: int) -> np.ndarray:
        out = np.zeros((2**self.n_w, 2**self.n_w))
        for p, v in self.parts:
            out += p * acceptance_operator(v, x)
        return out

    def max_acceptance(self, x: int):
        a = self.acceptance_operator(x)
        evals, evecs = np.linalg.eigh(a)
        vec = evecs[:, -1]
        if vec[np.argmax(np.abs(vec))] < 0:
            vec = -vec
        return float(evals[-1]), vec


def mix(v1, v2) -> MixedVerifier:
    """Equal-weight mixture of two verifiers on the same witness register."""
    def parts_of(v):
        if isinstance(v, MixedVerifier):
            return v.n_w, v.parts
        return v.n_w, ((1.0, v),)

    n1, p1 = parts_of(v1)
    n2, p2 = parts_of(v2)
    if n1 != n2:
        raise ValueError("witness registers differ")
    parts = tuple((0.5 * p, v) for p, v in p1) + tuple((0.5 * p, v) for p, v in p2)
    return MixedVerifier(n_w=n1, parts=parts)


def dyadic_weights(weights, bits: int = 20):
    """Round weights to multiples of 2^-bits that still sum to one."""
    scale = 1 << bits
    raw = [w * scale for w in weights]
    ints = [int(round(r)) for r in raw]
    diff = scale - sum(ints)
    # push the rounding slack onto the largest weight
    ints[int(np.argmax(weights))] += diff
    approx = [i / scale for i in ints]
    err = max(abs(a - w) for a, w in zip(approx, weights))
    return approx, err


def _part_verifier(part: StoqPart, n_w: int) -> VerifierCircuit:
    """One stoquastic verifier measuring -U_j H_j U_j^dag on the witness.

    The circuit applies U_j^dag on the term's witness qubits, then the
    isometry ladder, then routes the measured qubit to position 0.
    """
    support = part.support
    k = len(support)
    if part.kind == "Z00":
        ladder, n_0, n_plus, measured = zero_projector_isometry(k)
    else:
        ladder, n_0, n_plus, measured = x_projector_isometry(k)

    def map_q(q: int) -> int:
        if q < k:  # witness qubit of the local term
            return support[q]
        return n_w + (q - k)  # ancilla, appended after the witness

    gates = []
    # U_j^dag: X and CNOT are involutions, so reverse the gate list
    for g in reversed(part.circuit):
        gates.append(Gate(g.kind, tuple(support[q] for q in g.qubits)))
    for g in ladder:
        gates.append(Gate(g.kind, tuple(map_q(q) for q in g.qubits)))
    gates.extend(_swap_gates(0, map_q(measured)))
    if not gates:
        gates.extend(_swap_gates(0, 0) or (Gate("X", (0,)), Gate("X", (0,))))
    return VerifierCircuit(n=0, n_w=n_w, n_0=n_0, n_plus=n_plus,
                           gates=tuple(gates), out_basis="plus")


def hamiltonian_to_verifier(h: LhMinInstance, selector_bits: int = 20):
    """Stoquastic verifier V with Pr(V;x,psi) = <psi|(-alpha H + beta' I)|psi>.

    Returns (MixedVerifier, alpha, beta_prime).  alpha = gamma/2 and
    beta' = (1 - beta)/2 from the decomposition gamma H + beta I.
    """
    dec = decompose_stoquastic(h)
    weights = [p for p, _ in dec.parts]
    approx, err = dyadic_weights(weights, bits=selector_bits)
    parts = []
    for p_hat, (_, part) in zip(approx, dec.parts):
        if p_hat <= 0:
            continue
        parts.append((p_hat, _part_verifier(part, h.n)))
    verifier = MixedVerifier(
        n_w=h.n, parts=tuple(parts),
        metadata={"selector_bits": selector_bits, "mixing_error": err,
                  "num_parts": len(parts)},
    )
    alpha = dec.gamma / 2.0
    beta_prime = (1.0 - dec.beta) / 2.0
    return verifier, alpha, beta_prime


# ---------------------------------------------------------------------------
# circuit files


def circuit_to_document(v: VerifierCircuit) -> dict:
    return {
        "version": CIRCUIT_SCHEMA_VERSION,
        "n": v.n,
        "n_w": v.n_w,
        "n_0": v.n_0,
        "n_plus": v.n_plus,
        "out_basis": v.out_basis,
        "gates": [{"kind": g.kind, "qubits": list(g.qubits)} for g in v.gates],
    }


def circuit_from_document(doc: dict) -> VerifierCircuit:
    if doc.get("version") != CIRCUIT_SCHEMA_VERSION:
        raise ValueError(f"unsupported circuit schema version {doc.get('version')}")
    gates = tuple(Gate(g["kind"], tuple(g["qubits"])) for g in doc["gates"])
    return VerifierCircuit(
        n=int(doc["n"]), n_w=int(doc["n_w"]), n_0=int(doc["n_0"]),
        n_plus=int(doc["n_plus"]), gates=gates, out_basis=doc["out_basis"],
    )


def save_circuit(v: VerifierCircuit, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(circuit_to_document(v), fh, indent=1)
        fh.write("\n")


def load_circuit(path) -> VerifierCircuit:
    with open(path, encoding="utf-8") as fh:
        return circuit_from_document(json.load(fh))
