"""Instance data model, generators and JSON serialization.

Three kinds of instance share one versioned JSON container:
stoquastic SAT (non-negative projectors), stoquastic LH-MIN (terms with
non-positive off-diagonals), and disorder ensembles (terms tabulated
over a few random bits).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .ops import ETA, LocalOperator, OperatorSum, projector_check

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class StoqSatInstance:
    n: int
    epsilon: float
    projectors: tuple
    metadata: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "projectors", tuple(self.projectors))
        if not self.projectors:
            raise ValueError("instance needs at least one projector")

    @property
    def m(self) -> int:
        return len(self.projectors)


@dataclass(frozen=True)
class LhMinInstance:
    n: int
    terms: tuple
    lambda_yes: float
    lambda_no: float
    metadata: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    def operator(self) -> OperatorSum:
        return OperatorSum(self.n, self.terms)


@dataclass(frozen=True)
class TermTemplate:
    """One ensemble term: support, its random bits, block per bit assignment."""

    support: tuple
    random_bits: tuple
    tables: dict = field(hash=False)  # assignment int -> block ndarray

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "random_bits", tuple(self.random_bits))
        want = 2 ** len(self.random_bits)
        if sorted(self.tables) != list(range(want)):
            raise ValueError(f"tables must cover all {want} bit assignments")

    def block_for(self, r: int) -> np.ndarray:
        a = 0
        for i, b in enumerate(self.random_bits):
            a |= ((r >> b) & 1) << i
        return self.tables[a]


@dataclass(frozen=True)
class DisorderEnsemble:
    n: int
    m: int
    templates: tuple
    metadata: dict = field(default_factory=dict, hash=False)
    # set by estimators.replica_ensemble: (base ensemble, replica count)
    replica_of: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "templates", tuple(self.templates))

    def realize(self, r: int, lambda_yes: float = 0.0,
                lambda_no: float = 1.0) -> LhMinInstance:
        if not 0 <= r < 2**self.m:
            raise ValueError("random string out of range")
        terms = [
            LocalOperator(t.support, t.block_for(r), tag=f"r={r:b}")
            for t in self.templates
        ]
        return LhMinInstance(self.n, tuple(terms), lambda_yes, lambda_no)


def _stoquastic_violations(block: np.ndarray, tol: float = ETA):
    off = block - np.diag(np.diag(block))
    worst = float(np.max(off)) if off.size else 0.0
    return worst if worst > tol else None


def validate(instance) -> list:
    """All violated invariants, as human-readable strings.  Never raises."""
    report = []
    if isinstance(instance, StoqSatInstance):
        if not (0 < instance.epsilon <= 1):
            report.append(f"epsilon {instance.epsilon} outside (0, 1]")
        for i, p in enumerate(instance.projectors):
            ok, res = projector_check(p)
            if not ok:
                report.append(f"term {i}: not a non-negative projector "
                              f"(residual {res:.3g})")
            if p.support and p.support[-1] >= instance.n:
                report.append(f"term {i}: support outside {instance.n} qubits")
    elif isinstance(instance, LhMinInstance):
        if not instance.lambda_no - instance.lambda_yes > 0:
            report.append("lambda_no must exceed lambda_yes")
        for i, t in enumerate(instance.terms):
            worst = _stoquastic_violations(t.block)
            if worst is not None:
                report.append(
                    f"term {i}: positive off-diagonal entry {worst:.3g} "
                    "(not stoquastic)")
            if t.support and t.support[-1] >= instance.n:
                report.append(f"term {i}: support outside {instance.n} qubits")
    elif isinstance(instance, DisorderEnsemble):
        for i, t in enumerate(instance.templates):
            if t.support and max(t.support) >= instance.n:
                report.append(f"template {i}: support outside {instance.n} qubits")
            if t.random_bits and max(t.random_bits) >= instance.m:
                report.append(f"template {i}: random bits outside {instance.m}")
            for a, block in t.tables.items():
                worst = _stoquastic_violations(np.asarray(block))
                if worst is not None:
                    report.append(
                        f"template {i}, assignment {a}: positive "
                        f"off-diagonal {worst:.3g}")
    else:
        report.append(f"unknown instance type {type(instance).__name__}")
    return report


# ---------------------------------------------------------------------------
# DIMACS

def parse_dimacs(text: str):
    """Parse DIMACS CNF; returns (num_vars, clauses) with signed literals."""
    num_vars = None
    clauses = []
    current = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise SchemaError(f"bad DIMACS header: {line!r}")
            num_vars = int(parts[2])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            else:
                current.append(lit)
    if current:
        clauses.append(tuple(current))
    if num_vars is None:
        raise SchemaError("missing DIMACS 'p cnf' header")
    for cl in clauses:
        for lit in cl:
            if lit == 0 or abs(lit) > num_vars:
                raise SchemaError(f"literal {lit} out of range")
    return num_vars, clauses


def clause_projector(clause, n: int) -> LocalOperator:
    """I - |b><b| on the clause's variables, b the violating assignment.

    Returns None for tautological clauses.
    """
    variables = sorted({abs(lit) for lit in clause})
    sign = {}
    for lit in clause:
        v = abs(lit)
        s = lit > 0
        if v in sign and sign[v] != s:
            return None  # tautology, projector is the identity
        sign[v] = s
    qubits = tuple(v - 1 for v in variables)
    b = 0
    for i, v in enumerate(variables):
        # positive literal is falsified by 0, negative by 1
        if not sign[v]:
            b |= 1 << i
    dim = 2 ** len(qubits)
    block = np.eye(dim)
    block[b, b] = 0.0
    return LocalOperator(qubits, block, tag=f"clause{tuple(clause)}")


def from_dimacs(text: str, k_limit: int = 6) -> StoqSatInstance:
    """Classical CNF as diagonal stoquastic SAT: one projector per clause."""
    num_vars, clauses = parse_dimacs(text)
    if not clauses:
        raise SchemaError("formula has no clauses")
    projectors = []
    for cl in clauses:
        width = len({abs(lit) for lit in cl})
        if width > k_limit:
            raise SchemaError(f"clause {cl} wider than k limit {k_limit}")
        proj = clause_projector(cl, num_vars)
        if proj is None:
            warnings.warn(f"dropping tautological clause {cl}")
            continue
        projectors.append(proj)
    if not projectors:
        raise SchemaError("all clauses were tautologies")
    # A violated clause has <x|Pi|x> = 0 = 1 - epsilon with epsilon = 1.
    return StoqSatInstance(
        n=num_vars,
        epsilon=1.0,
        projectors=tuple(projectors),
        metadata={"source": "dimacs", "clauses": len(clauses)},
    )


# ---------------------------------------------------------------------------
# generators

def random_projector_instance(n: int, k: int, m_terms: int, seed: int,
                              max_k: int = 6) -> StoqSatInstance:
    """Random non-negative projectors built block by block (Proposition-1 form)."""
    if k > max_k:
        raise ValueError(f"k={k} exceeds limit {max_k}")
    if m_terms < 1:
        raise ValueError("need at least one term")
    rng = np.random.default_rng(seed)
    projectors = []
    dim = 2**k
    for t in range(m_terms):
        support = tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))
        # random partition of the local basis into blocks
        labels = rng.integers(0, max(2, dim // 2), size=dim)
        block = np.zeros((dim, dim))
        groups: dict = {}
        for x, lab in enumerate(labels):
            groups.setdefault(int(lab), []).append(x)
        chosen = 0
        for members in groups.values():
            if rng.random() < 0.5 and chosen:
                continue  # leave this block out of the projector
            v = rng.random(len(members)) + 0.05
            v /= np.linalg.norm(v)
            for i, x in enumerate(members):
                for j, y in enumerate(members):
                    block[x, y] = v[i] * v[j]
            chosen += 1
        projectors.append(LocalOperator(support, block, tag=f"rand{t}"))
    return StoqSatInstance(
        n=n, epsilon=0.5, projectors=tuple(projectors),
        metadata={"source": "random", "seed": seed, "k": k},
    )


# ---------------------------------------------------------------------------
# serialization

def _matrix_to_json(block: np.ndarray):
    return [float(v) for v in np.asarray(block).ravel()]


def _matrix_from_json(flat, dim: int) -> np.ndarray:
    arr = np.asarray(flat, dtype=float)
    if arr.size != dim * dim:
        raise SchemaError("matrix size does not match dim")
    if not np.all(np.isfinite(arr)):
        raise SchemaError("non-finite matrix entry")
    return arr.reshape(dim, dim)


def _term_to_json(t: LocalOperator):
    return {
        "qubits": list(t.support),
        "matrix": _matrix_to_json(t.block),
        "dim": 2 ** len(t.support),
    }


def _term_from_json(doc) -> LocalOperator:
    qubits = tuple(int(q) for q in doc["qubits"])
    return LocalOperator(qubits, _matrix_from_json(doc["matrix"], int(doc["dim"])))


def to_document(instance) -> dict:
    if isinstance(instance, StoqSatInstance):
        return {
            "version": SCHEMA_VERSION,
            "kind": "stoq-sat",
            "n": instance.n,
            "epsilon": instance.epsilon,
            "terms": [_term_to_json(t) for t in instance.projectors],
            "metadata": instance.metadata,
        }
    if isinstance(instance, LhMinInstance):
        return {
            "version": SCHEMA_VERSION,
            "kind": "lh-min",
            "n": instance.n,
            "lambda_yes": instance.lambda_yes,
            "lambda_no": instance.lambda_no,
            "terms": [_term_to_json(t) for t in instance.terms],
            "metadata": instance.metadata,
        }
    if isinstance(instance, DisorderEnsemble):
        terms = []
        for t in instance.templates:
            l = len(t.random_bits)
            dim = int(next(iter(t.tables.values())).shape[0])
            terms.append({
                "qubits": list(t.support),
                "dim": dim,
                "random_bits": list(t.random_bits),
                "tables": {
                    format(a, f"0{l}b") if l else "": _matrix_to_json(t.tables[a])
                    for a in range(2**l)
                },
            })
        return {
            "version": SCHEMA_VERSION,
            "kind": "ensemble",
            "n": instance.n,
            "m": instance.m,
            "terms": terms,
            "metadata": instance.metadata,
        }
    raise TypeError(f"cannot serialize {type(instance).__name__}")


def from_document(doc: dict):
    if doc.get("version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {doc.get('version')}")
    kind = doc.get("kind")
    n = int(doc["n"])
    metadata = doc.get("metadata", {})
    if kind == "stoq-sat":
        inst = StoqSatInstance(
            n=n,
            epsilon=float(doc["epsilon"]),
            projectors=tuple(_term_from_json(t) for t in doc["terms"]),
            metadata=metadata,
        )
    elif kind == "lh-min":
        inst = LhMinInstance(
            n=n,
            terms=tuple(_term_from_json(t) for t in doc["terms"]),
            lambda_yes=float(doc["lambda_yes"]),
            lambda_no=float(doc["lambda_no"]),
            metadata=metadata,
        )
    elif kind == "ensemble":
        templates = []
        for t in doc["terms"]:
            bits = tuple(int(b) for b in t["random_bits"])
            dim = int(t["dim"])
            tables = {}
            for key, flat in t["tables"].items():
                a = int(key, 2) if key else 0
                tables[a] = _matrix_from_json(flat, dim)
            templates.append(TermTemplate(tuple(int(q) for q in t["qubits"]),
                                          bits, tables))
        inst = DisorderEnsemble(n=n, m=int(doc["m"]),
                                templates=tuple(templates), metadata=metadata)
    else:
        raise SchemaError(f"unknown instance kind {kind!r}")
    report = validate(inst)
    if report:
        raise SchemaError("instance fails validation: " + "; ".join(report))
    return inst


def save(instance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_document(instance), fh, indent=1)
        fh.write("\n")


def load(path):
    with open(path, encoding="utf-8") as fh:
        return from_document(json.load(fh))
