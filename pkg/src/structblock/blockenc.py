"""Block-encodings of structured matrices in three data-access models.

The circuit is always ``W^dag . SELECT . V`` where ``V`` loads the square
roots of the decomposition coefficients and ``W`` loads their conjugates,
so that ``<0|W^dag SELECT V|0> = sum_j x_j U_j / chi``.

Qubit order: ancillas first (index register, then any flag/helper qubits),
system register last.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .displacement import LcuDecomposition, lcu_decompose_structured
from .simcore import (
    Circuit,
    Controlled,
    RegisterLayout,
    ResourceTally,
    SimulationError,
    adder_cost,
    comparator_cost,
    embed,
    h_gate,
    index_coefficients,
    index_width,
    select_u,
    x_gate,
    EXPLICIT_CAP,
)
from .stateprep import (
    AmplitudeOracle,
    ae_prep_uses,
    loading_circuit,
    plan_loading,
    prep_gate,
    principal_sqrt,
    qram_bits,
    qram_build,
    qram_level_gates,
    qram_prep_circuit,
    qram_prep_pair,
    qram_row_maps,
    required_L,
    safe_tree,
    sparse_support_circuit,
)
from .structmat import StructuredMatrix, edit_columns, log2_int, toeplitz_edits

MODELS = ("blackbox", "qram", "explicit")
TOEPLITZ_TYPE = ("toeplitz", "circulant", "hankel", "banded_toeplitz")
LIKE = ("toeplitz_like", "hankel_like")
VERIFY_TOL = 1e-8


class EncodingError(ValueError):
    pass


class InfeasibleError(EncodingError):
    pass


@dataclass(frozen=True)
class AccessModel:
    kind: str
    delta: float | None = None
    eps_prep: float | None = None
    exact_prep: bool = False
    eps: float | None = None
    rotation: str = "exact"
    seed: int | None = 0

    def __post_init__(self):
        if self.kind not in MODELS:
            raise EncodingError(f"unknown access model {self.kind!r}")
        if self.exact_prep or self.kind == "explicit":
            return
        if self.kind == "blackbox" and self.delta is None:
            raise EncodingError("blackbox model needs delta")
        if self.eps_prep is None:
            raise EncodingError(f"{self.kind} model needs eps_prep")

    @classmethod
    def for_target(cls, kind: str, chi: float, eps: float, **kw) -> "AccessModel":
        """Split ``eps`` evenly: ``chi delta^2 = eps/2`` and ``chi eps_p = eps/2``."""
        delta = float(np.sqrt(eps / (2 * chi))) if kind == "blackbox" else None
        return cls(kind, delta=delta, eps_prep=eps / (2 * chi), eps=eps, **kw)


@dataclass(frozen=True)
class BlockEncoding:
    circuit: Circuit
    alpha: float
    a: int
    epsilon_bound: float
    tally: ResourceTally
    family: str
    model: str
    n: int
    memory_entries: int = 0
    decomposition: LcuDecomposition | None = None
    info: dict = field(default_factory=dict)

    @property
    def system_qubits(self) -> int:
        return self.circuit.m - self.a


def expected_ancillas(family: str, model: str, n: int, n_terms: int | None = None) -> int:
    w = log2_int(n)
    if model == "explicit":
        if family not in ("circulant", "banded_toeplitz"):
            raise EncodingError(f"explicit model is not available for {family}")
        return max(1, int(np.ceil(np.log2(max(n_terms or 1, 1)))))
    if family in TOEPLITZ_TYPE:
        return w + 2 if model == "blackbox" else w + 1
    if family in LIKE:
        return 2 * w + 2 if model == "blackbox" else 2 * w
    raise EncodingError(f"unknown family {family!r}")


def _as_toeplitz(S: StructuredMatrix) -> StructuredMatrix:
    """Circulant and banded matrices are Toeplitz; use the common 2n-slot form."""
    if S.family == "circulant":
        n = S.n
        c = S.seq
        seq = np.array([c[(j) % n] for j in range(-(n - 1), n)])
        return StructuredMatrix("toeplitz", n, seq)
    if S.family == "banded_toeplitz":
        return StructuredMatrix("toeplitz", S.n, S.seq)
    return S


def _check_feasible(model: AccessModel, chi: float):
    if model.eps is None or model.exact_prep or model.kind == "explicit":
        return
    if model.delta is not None and chi * model.delta ** 2 > model.eps / 2 * (1 + 1e-9):
        raise InfeasibleError(
            f"chi*delta^2 = {chi * model.delta ** 2:.3g} exceeds eps/2 = {model.eps / 2:.3g}"
        )
    if model.eps_prep is not None and chi * model.eps_prep > model.eps / 2 * (1 + 1e-9):
        raise InfeasibleError(
            f"chi*eps_p = {chi * model.eps_prep:.3g} exceeds eps/2 = {model.eps / 2:.3g}"
        )


def encode(S: StructuredMatrix, model: AccessModel) -> BlockEncoding:
    fam = S.family
    if model.kind == "explicit":
        if fam not in ("circulant", "banded_toeplitz"):
            raise EncodingError(f"explicit model supports only circulant and banded matrices, not {fam}")
        dec = lcu_decompose_structured(S)
        return _encode_explicit(S, dec)
    if fam in LIKE:
        dec = lcu_decompose_structured(S)
        _check_feasible(model, 2 * dec.alpha)
        return _encode_grid(S, dec, model)
    dec = lcu_decompose_structured(_as_toeplitz(S))
    _check_feasible(model, 2 * dec.alpha)
    return _encode_shift(S, dec, model)


def _assemble(V: Circuit, W: Circuit, sel: Circuit, idx, sys, m) -> Circuit:
    a_idx = len(idx)
    mapping = list(idx) + list(sys)
    sel_ops = tuple(op.remap(lambda q: mapping[q]) for op in sel.ops)
    return V.then(Circuit(m, sel_ops), W.dagger())


def _bound(model: AccessModel, alpha: float) -> float:
    if model.exact_prep or model.kind == "explicit":
        return 0.0
    chi = 2 * alpha
    if model.kind == "qram":
        return chi * model.eps_prep
    return chi * (model.delta ** 2 + model.eps_prep)


def _encode_explicit(S, dec) -> BlockEncoding:
    n, w = S.n, log2_int(S.n)
    sel = select_u(dec, "compact")
    a = index_width(dec, "compact")
    m = a + w
    idx, sys = list(range(a)), list(range(a, m))
    x = index_coefficients(dec, "compact")
    V = Circuit(m, (prep_gate(idx, principal_sqrt(x), gates=2 * len(dec.terms)),))
    W = Circuit(m, (prep_gate(idx, np.conj(principal_sqrt(x)), gates=2 * len(dec.terms)),))
    circ = _assemble(V, W, sel, idx, sys, m)
    circ = Circuit(m, circ.ops, RegisterLayout.from_sizes(("index", a), ("sys", w)), name="explicit")
    return BlockEncoding(circ, dec.alpha, a, 0.0, circ.tally(a), S.family, "explicit", n,
                         memory_entries=len(dec.terms), decomposition=dec)


def _encode_shift(S, dec, model) -> BlockEncoding:
    n, w = S.n, log2_int(S.n)
    sel = select_u(dec, "shift")
    x = index_coefficients(dec, "shift")
    alpha = dec.alpha
    info: dict = {"layout": "shift"}
    if model.kind == "qram":
        a = w + 1
        m = a + w
        idx, sys = list(range(a)), list(range(a, m))
        eps_p = None if model.exact_prep else model.eps_prep
        first, second = safe_tree(x[:n]), safe_tree(x[n:])
        V = embed(qram_prep_pair(first, second, eps_p), m)
        W = embed(qram_prep_pair(first, second, eps_p, conjugate=True), m)
        memory = first.memory_entries + second.memory_entries + 1
        layout = RegisterLayout.from_sizes(("index", a), ("sys", w))
        extra_queries = 0
    else:
        a = w + 2
        m = a + w
        idx, flag, sys = list(range(w + 1)), w + 1, list(range(a, m))
        layout = RegisterLayout.from_sizes(("index", w + 1), ("flag", 1), ("sys", w))
        memory = 0
        if model.exact_prep:
            V = Circuit(m, (prep_gate(idx, principal_sqrt(x)),))
            W = Circuit(m, (prep_gate(idx, np.conj(principal_sqrt(x))),))
            extra_queries = 0
        else:
            oracle = AmplitudeOracle(x, cost_per_call=2)
            plan = plan_loading(oracle, 2 * n, model.delta, model.eps_prep, model.seed, model.rotation)
            base = Circuit(m, tuple(h_gate(q) for q in idx))
            zero = idx + [flag]
            per_use = 2 * oracle.cost_per_call
            V = loading_circuit(base, idx, flag, zero, plan.amplitudes, plan.schedule, per_use)
            W = loading_circuit(base, idx, flag, zero, np.conj(plan.amplitudes), plan.schedule, per_use)
            extra_queries = per_use * (plan.estimate.prep_uses if plan.estimate else 0)
            info.update(P0=plan.P0, P_min=plan.P_min, L=plan.L, bits=plan.bits)
    circ = _assemble(V, W, sel, idx, sys, m)
    circ = Circuit(m, circ.ops, layout, name=f"{S.family}_{model.kind}")
    t = circ.tally(a)
    tally = ResourceTally(t.queries + extra_queries, t.gates, a)
    return BlockEncoding(circ, alpha, a, _bound(model, alpha), tally, S.family, model.kind, n,
                         memory_entries=memory, decomposition=dec, info=info)


def support_positions(S: StructuredMatrix, dec: LcuDecomposition) -> tuple[int, list]:
    """Per-row column lists (rows 1..n-1) covering the displacement support, padded to ``d``."""
    n, d = S.n, S.d
    cand = edit_columns(S)
    grid = dec.coefficient_grid()
    rows = [list(range(d))]
    for i in range(1, n):
        cols = sorted(cand.get(i, set()) | {n - 1})
        nz = set(np.nonzero(np.abs(grid[i]) > 0)[0].tolist())
        if not nz <= set(cols):
            raise EncodingError(f"row {i} has displacement entries outside the edit-derived support")
        for c in range(n):
            if len(cols) >= d:
                break
            if c not in cols:
                cols.append(c)
        rows.append(sorted(cols))
    return d, rows


def like_memory(n: int, d: int) -> int:
    return n * d * log2_int(n) + 2 * n - 1


def _encode_grid(S, dec, model) -> BlockEncoding:
    n, w = S.n, log2_int(S.n)
    sel = select_u(dec, "grid")
    x = index_coefficients(dec, "grid")
    alpha = dec.alpha
    info: dict = {"layout": "grid", "d": S.d}
    if model.kind == "qram":
        a = 2 * w
        m = a + w
        idx, sys = list(range(a)), list(range(a, m))
        eps_p = None if model.exact_prep else model.eps_prep
        grid = x.reshape(n, n)
        row_trees = [safe_tree(r) for r in grid]
        norm_tree = qram_build(np.abs(grid).sum(axis=1))
        P, Pc, Q = qram_row_maps(row_trees, norm_tree, eps_p)
        V = embed(Q.then(P), m)
        W = embed(Q.then(Pc), m)
        layout = RegisterLayout.from_sizes(("row", w), ("col", w), ("sys", w))
        memory = like_memory(n, S.d)
        extra_queries = 0
    else:
        a = 2 * w + 2
        m = a + w
        r1, idx, flag = 0, list(range(1, 2 * w + 1)), 2 * w + 1
        sys = list(range(a, m))
        layout = RegisterLayout.from_sizes(("reg1", 1), ("reg2", w), ("reg3", w), ("reg4", 1), ("sys", w))
        memory = 0
        if model.exact_prep:
            V = Circuit(m, (prep_gate(idx, principal_sqrt(x)),))
            W = Circuit(m, (prep_gate(idx, np.conj(principal_sqrt(x))),))
            extra_queries = 0
        else:
            d, rows = support_positions(S, dec)
            base, _, stats = sparse_support_circuit(rows, n, d, m_total=m, offset=0)
            N = stats["support"]
            support_mask = np.zeros(n * n, dtype=bool)
            for i, cols in enumerate(rows):
                support_mask[i * n + np.array(cols if i else range(n))] = True
            oracle = AmplitudeOracle(x[support_mask], cost_per_call=1)
            plan = plan_loading(oracle, N, model.delta, model.eps_prep, model.seed, model.rotation)
            amps = np.zeros(n * n, dtype=complex)
            amps[support_mask] = plan.amplitudes
            zero = [r1] + idx + [flag]
            per_use = 2 * oracle.cost_per_call
            V = loading_circuit(base, idx, flag, zero, amps, plan.schedule, per_use)
            W = loading_circuit(base, idx, flag, zero, np.conj(amps), plan.schedule, per_use)
            extra_queries = per_use * (plan.estimate.prep_uses if plan.estimate else 0)
            info.update(P0=plan.P0, P_min=plan.P_min, L=plan.L, bits=plan.bits, support=N)
    circ = _assemble(V, W, sel, idx, sys, m)
    circ = Circuit(m, circ.ops, layout, name=f"{S.family}_{model.kind}")
    t = circ.tally(a)
    tally = ResourceTally(t.queries + extra_queries, t.gates, a)
    return BlockEncoding(circ, alpha, a, _bound(model, alpha), tally, S.family, model.kind, n,
                         memory_entries=memory, decomposition=dec, info=info)


# ---------------------------------------------------------------- extraction and checks


def extract_block(U: Circuit, a: int, alpha: float = 1.0) -> np.ndarray:
    """``alpha (<0|^a (x) I) U (|0>^a (x) I)`` as a dense matrix."""
    s = U.m - a
    if s < 0:
        raise SimulationError("more ancillas than qubits")
    if s > EXPLICIT_CAP:
        raise SimulationError(f"system of {s} qubits is too large to materialize")
    X = np.zeros((2 ** U.m, 2 ** s), dtype=complex)
    X[np.arange(2 ** s), np.arange(2 ** s)] = 1
    out = U.apply_batch(X)
    return alpha * out[: 2 ** s, :]


@dataclass(frozen=True)
class VerifyReport:
    family: str
    model: str
    n: int
    alpha: float
    ancillas: int
    expected_ancillas: int
    epsilon_claimed: float
    deviation: float
    norm_M: float
    alpha_ok: bool
    ancilla_ok: bool
    passed: bool
    queries: int
    gates: int
    memory_entries: int

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["status"] = "PASS" if self.passed else "FAIL"
        return d


def verify_block_encoding(be: BlockEncoding, M) -> VerifyReport:
    M = np.asarray(M, dtype=complex)
    B = extract_block(be.circuit, be.a, be.alpha)
    if B.shape != M.shape:
        raise EncodingError(f"block shape {B.shape} does not match matrix {M.shape}")
    dev = float(np.linalg.norm(M - B, 2))
    normM = float(np.linalg.norm(M, 2))
    try:
        n_terms = len(be.decomposition) if be.decomposition is not None else None
        exp_a = expected_ancillas(be.family, be.model, be.n, n_terms)
    except EncodingError:
        exp_a = be.a
    alpha_ok = be.alpha >= normM - be.epsilon_bound - VERIFY_TOL
    ancilla_ok = exp_a == be.a
    passed = dev <= be.epsilon_bound + VERIFY_TOL and alpha_ok and ancilla_ok
    return VerifyReport(
        be.family, be.model, be.n, be.alpha, be.a, exp_a, be.epsilon_bound, dev, normM,
        bool(alpha_ok), bool(ancilla_ok), bool(passed), be.tally.queries, be.tally.gates, be.memory_entries,
    )


def complement_to_hermitian(be: BlockEncoding) -> BlockEncoding:
    """Encoding of ``[[0, M], [M^dag, 0]]`` with the same ``alpha`` and ``a``.

    One new system qubit ``q`` (most significant) selects ``U`` or ``U^dag``,
    followed by an X on ``q``.
    """
    a, m = be.a, be.circuit.m
    q = a
    shift = lambda p: p if p < a else p + 1  # noqa: E731
    ops = tuple(op.remap(shift) for op in be.circuit.ops)
    dag = tuple(op.remap(shift) for op in be.circuit.dagger().ops)
    circ = Circuit(m + 1, (Controlled((q,), 1, ops), Controlled((q,), 0, dag), x_gate(q)),
                   name=be.circuit.name + "_herm")
    t = circ.tally(a)
    tally = ResourceTally(2 * be.tally.queries, t.gates, a)
    return replace(be, circuit=circ, tally=tally, n=2 * be.n, family=be.family,
                   info={**be.info, "hermitian_extension": True})


# ---------------------------------------------------------------- closed-form resources


@dataclass(frozen=True)
class ResourceEstimate:
    family: str
    model: str
    n: int
    queries: int
    gates: int
    ancillas: int
    memory_entries: int
    dense_memory: int
    L: int = 0
    P0: float = 1.0

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _select_gates(family: str, n: int) -> int:
    w = log2_int(n)
    if family in LIKE:
        return 2 * comparator_cost(w) + 1 + 2 * adder_cost(w)
    return 2 * comparator_cost(w + 1) + 1 + adder_cost(w)


def resource_estimate(family: str, model: str, n: int, delta: float | None = None, eps: float | None = None,
                      chi: float = 2.0, xmax: float = 1.0, d: int = 2, eps_prep: float | None = None) -> ResourceEstimate:
    """Closed-form counts, no simulation.

    ``chi`` is the coefficient 1-norm and ``xmax`` the largest coefficient
    modulus; together they fix the initial success probability
    ``P0 = chi / (N xmax)`` of the oracle-driven loading over ``N`` positions.
    """
    w = log2_int(n)
    if eps is not None:
        delta = delta if delta is not None else float(np.sqrt(eps / (2 * chi)))
        eps_prep = eps_prep if eps_prep is not None else eps / (2 * chi)
    sel = _select_gates(family, n)
    if model == "explicit":
        terms = n if family == "circulant" else 4 * d + 1
        a = expected_ancillas(family, "explicit", n, terms)
        return ResourceEstimate(family, model, n, 0, 2 * 2 * terms + terms * (adder_cost(w) + comparator_cost(w) + a),
                                a, terms, n * n)
    a = expected_ancillas(family, model, n)
    if model == "qram":
        eps_prep = eps_prep if eps_prep is not None else 1e-3
        if family in LIKE:
            bits = qram_bits(w, eps_prep)
            prep = sum(qram_level_gates(l + w, bits) for l in range(w + 1)) + sum(qram_level_gates(l, bits) for l in range(w + 1))
            memory = like_memory(n, d)
        else:
            bits = qram_bits(w + 1, eps_prep)
            prep = sum(qram_level_gates(l, bits) for l in range(w + 2))
            memory = 2 * (2 * n - 1) + 1
        return ResourceEstimate(family, model, n, 0, 2 * prep + sel, a, memory, n * n)
    if delta is None:
        raise EncodingError("blackbox estimate needs delta or eps")
    if family in LIKE:
        N = n + (n - 1) * d
        base_gates = 40 * w * (1 + int(np.ceil(np.pi / 4 * np.sqrt(2 * d))))
        index_bits = 2 * w
    else:
        N = 2 * n
        base_gates = w + 1
        index_bits = w + 1
    P0 = min(1.0, chi / (N * xmax))
    P_min = P0 / 1.5
    L = required_L(P_min, delta)
    per_use = 4
    ua_gates = base_gates + 4 * index_bits
    prep_gates = L * ua_gates + (L - 1) // 2 * (2 * (index_bits + 1) + 1)
    queries = per_use * (2 * L + ae_prep_uses(P0))
    return ResourceEstimate(family, model, n, int(queries), int(2 * prep_gates + sel), a, 0, n * n, L, P0)


def fit_exponent(ns, values) -> float:
    """Slope of ``log(values)`` against ``log(n)``."""
    return float(np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(values, float)), 1)[0])


def fit_polylog(ns, values) -> tuple[float, float]:
    """Fit ``values ~ c (log2 n)^p``; returns ``(p, max relative residual)``."""
    ln = np.log(np.log2(np.asarray(ns, float)))
    lv = np.log(np.asarray(values, float))
    p, c = np.polyfit(ln, lv, 1)
    resid = np.max(np.abs(np.exp(c + p * ln) / np.exp(lv) - 1))
    return float(p), float(resid)
