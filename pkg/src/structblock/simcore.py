"""Small dense statevector simulator and the circuit gadgets used by the encodings.

Qubit 0 is the most significant bit of a basis label. A circuit is a flat
list of primitive operations; each one knows how to act on a batch of
statevectors stored as a tensor of shape ``(2,)*m + (batch,)``.

Arithmetic (adders, comparators, phase oracles) is realized by its action on
basis states. Gate counts for those pieces are charged with fixed
implementation-defined constants that grow linearly in the register width.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .structmat import log2_int

EXPLICIT_CAP = 12
MAX_AMPLITUDES = 2 ** 20

# Gate charges per register width w. The absolute constants are ours.
ADDER_GATES = 6
COMPARATOR_GATES = 4


def adder_cost(w: int) -> int:
    return ADDER_GATES * max(w, 1)


def comparator_cost(w: int) -> int:
    return COMPARATOR_GATES * max(w, 1) + 1


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class ResourceTally:
    queries: int = 0
    gates: int = 0
    ancillas: int = 0

    def __post_init__(self):
        if min(self.queries, self.gates, self.ancillas) < 0:
            raise ValueError("resource counts must be nonnegative")

    def __add__(self, other: "ResourceTally") -> "ResourceTally":
        return ResourceTally(
            self.queries + other.queries,
            self.gates + other.gates,
            max(self.ancillas, other.ancillas),
        )

    def as_dict(self) -> dict:
        return {"queries": self.queries, "gates": self.gates, "ancillas": self.ancillas}


@dataclass(frozen=True)
class RegisterLayout:
    """Named, disjoint qubit ranges covering ``0..m-1``."""

    registers: tuple  # of (name, start, stop)

    def __post_init__(self):
        spans = sorted((start, stop) for _, start, stop in self.registers)
        pos = 0
        for start, stop in spans:
            if start != pos or stop < start:
                raise SimulationError(f"register ranges are not a disjoint cover: {self.registers}")
            pos = stop
        names = [name for name, _, _ in self.registers]
        if len(set(names)) != len(names):
            raise SimulationError("duplicate register names")

    @classmethod
    def from_sizes(cls, *pairs) -> "RegisterLayout":
        regs, pos = [], 0
        for name, size in pairs:
            regs.append((name, pos, pos + size))
            pos += size
        return cls(tuple(regs))

    @property
    def m(self) -> int:
        return max((stop for _, _, stop in self.registers), default=0)

    def __getitem__(self, name: str) -> list[int]:
        for reg, start, stop in self.registers:
            if reg == name:
                return list(range(start, stop))
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(reg == name for reg, _, _ in self.registers)

    def size(self, name: str) -> int:
        return len(self[name])


@dataclass(frozen=True)
class QState:
    m: int
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.size != 2 ** self.m:
            raise SimulationError(f"{amps.size} amplitudes do not fit {self.m} qubits")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-12:
            raise SimulationError(f"state is not normalized (norm {norm})")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_vector(cls, v) -> "QState":
        v = np.asarray(v, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise SimulationError("cannot normalize the zero vector")
        return cls(log2_int(v.size), v / norm)

    @classmethod
    def basis(cls, m: int, index: int) -> "QState":
        v = np.zeros(2 ** m, dtype=complex)
        v[index] = 1
        return cls(m, v)

    def fidelity(self, other: "QState") -> float:
        return float(abs(np.vdot(self.amps, other.amps)) ** 2)


# ---------------------------------------------------------------- primitives


def _on_qubits(psi: np.ndarray, qubits, fn) -> np.ndarray:
    """Apply ``fn`` to ``psi`` viewed as a ``(2**k, rest)`` matrix over ``qubits``."""
    k = len(qubits)
    moved = np.moveaxis(psi, list(qubits), list(range(k)))
    shape = moved.shape
    out = fn(moved.reshape(2 ** k, -1)).reshape(shape)
    return np.moveaxis(out, list(range(k)), list(qubits))


class Op:
    qubits: tuple
    gates: int
    queries: int

    def act(self, psi):  # pragma: no cover - interface
        raise NotImplementedError

    def dagger(self) -> "Op":  # pragma: no cover - interface
        raise NotImplementedError

    def remap(self, f) -> "Op":  # pragma: no cover - interface
        raise NotImplementedError

    def cost(self) -> tuple[int, int]:
        return self.gates, self.queries


@dataclass(frozen=True)
class Gate(Op):
    """Dense unitary on a few qubits."""

    qubits: tuple
    matrix: np.ndarray
    gates: int = 1
    queries: int = 0
    label: str = ""

    def act(self, psi):
        return _on_qubits(psi, self.qubits, lambda X: self.matrix @ X)

    def dagger(self):
        return replace(self, matrix=self.matrix.conj().T)

    def remap(self, f):
        return replace(self, qubits=tuple(f(q) for q in self.qubits))


@dataclass(frozen=True)
class Diagonal(Op):
    qubits: tuple
    phases: np.ndarray
    gates: int = 1
    queries: int = 0
    label: str = ""

    def act(self, psi):
        return _on_qubits(psi, self.qubits, lambda X: self.phases[:, None] * X)

    def dagger(self):
        return replace(self, phases=self.phases.conj())

    def remap(self, f):
        return replace(self, qubits=tuple(f(q) for q in self.qubits))


@dataclass(frozen=True)
class BasisMap(Op):
    """Signed permutation ``|x> -> phase[x] |dest[x]>`` on a sub-register."""

    qubits: tuple
    dest: np.ndarray
    phase: np.ndarray
    gates: int = 1
    queries: int = 0
    label: str = ""

    def __post_init__(self):
        dest = np.asarray(self.dest, dtype=np.int64)
        if dest.size != 2 ** len(self.qubits) or np.unique(dest).size != dest.size:
            raise SimulationError(f"basis map {self.label!r} is not a permutation")
        object.__setattr__(self, "dest", dest)
        object.__setattr__(self, "phase", np.asarray(self.phase, dtype=complex))

    def act(self, psi):
        def fn(X):
            out = np.empty_like(X)
            out[self.dest] = self.phase[:, None] * X
            return out

        return _on_qubits(psi, self.qubits, fn)

    def dagger(self):
        inv = np.empty_like(self.dest)
        inv[self.dest] = np.arange(self.dest.size)
        return replace(self, dest=inv, phase=self.phase[inv].conj())

    def remap(self, f):
        return replace(self, qubits=tuple(f(q) for q in self.qubits))


@dataclass(frozen=True)
class Multiplexed(Op):
    """Uniformly controlled unitary: ``blocks[c]`` on ``targets`` when controls read ``c``."""

    controls: tuple
    targets: tuple
    blocks: np.ndarray
    gates: int = 1
    queries: int = 0
    label: str = ""

    @property
    def qubits(self):
        return self.controls + self.targets

    def act(self, psi):
        c, t = 2 ** len(self.controls), 2 ** len(self.targets)

        def fn(X):
            Y = X.reshape(c, t, -1)
            return np.einsum("cij,cjr->cir", self.blocks, Y).reshape(c * t, -1)

        return _on_qubits(psi, self.qubits, fn)

    def dagger(self):
        return replace(self, blocks=np.conj(np.swapaxes(self.blocks, 1, 2)))

    def remap(self, f):
        return replace(
            self,
            controls=tuple(f(q) for q in self.controls),
            targets=tuple(f(q) for q in self.targets),
        )


@dataclass(frozen=True)
class Controlled(Op):
    """Run ``inner`` (ops on the full register) only where ``controls`` read ``value``."""

    controls: tuple
    value: int
    inner: tuple
    gates: int = 0
    queries: int = 0

    def __post_init__(self):
        touched = {q for op in self.inner for q in op.qubits}
        if touched & set(self.controls):
            raise SimulationError("controlled body acts on its own control qubits")
        if self.gates == 0 and self.queries == 0:
            g = sum(op.cost()[0] + 2 * len(self.controls) for op in self.inner)
            q = sum(op.cost()[1] for op in self.inner)
            object.__setattr__(self, "gates", g)
            object.__setattr__(self, "queries", q)

    @property
    def qubits(self):
        return self.controls

    def act(self, psi):
        k = len(self.controls)
        bits = [(self.value >> (k - 1 - b)) & 1 for b in range(k)]
        ctrl = sorted(self.controls)
        shift = lambda q: q - sum(1 for c in ctrl if c < q)  # noqa: E731
        body = [op.remap(shift) for op in self.inner]
        idx = [slice(None)] * psi.ndim
        for q, b in zip(self.controls, bits):
            idx[q] = b
        idx = tuple(idx)
        out = psi.copy()
        sub = psi[idx]
        for op in body:
            sub = op.act(sub)
        out[idx] = sub
        return out

    def dagger(self):
        return replace(self, inner=tuple(op.dagger() for op in reversed(self.inner)))

    def remap(self, f):
        return replace(
            self,
            controls=tuple(f(q) for q in self.controls),
            inner=tuple(op.remap(f) for op in self.inner),
        )


# ---------------------------------------------------------------- circuits


@dataclass(frozen=True)
class Circuit:
    m: int
    ops: tuple = ()
    layout: RegisterLayout | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        for op in self.ops:
            for q in _all_qubits(op):
                if not 0 <= q < self.m:
                    raise SimulationError(f"op touches qubit {q} outside 0..{self.m - 1}")

    def then(self, *others: "Circuit | Op") -> "Circuit":
        ops = list(self.ops)
        for other in others:
            if isinstance(other, Circuit):
                if other.m != self.m:
                    raise SimulationError("qubit-count mismatch in composition")
                ops.extend(other.ops)
            else:
                ops.append(other)
        return replace(self, ops=tuple(ops))

    def dagger(self) -> "Circuit":
        return replace(self, ops=tuple(op.dagger() for op in reversed(self.ops)))

    def tally(self, ancillas: int = 0) -> ResourceTally:
        g = sum(op.cost()[0] for op in self.ops)
        q = sum(op.cost()[1] for op in self.ops)
        return ResourceTally(q, g, ancillas)

    def apply_batch(self, X: np.ndarray) -> np.ndarray:
        """Apply to the columns of ``X`` (shape ``(2**m, batch)``)."""
        X = np.asarray(X, dtype=complex)
        if X.ndim == 1:
            return self.apply_batch(X[:, None])[:, 0]
        if X.shape[0] != 2 ** self.m:
            raise SimulationError(f"expected {2 ** self.m} rows, got {X.shape[0]}")
        if X.size > 8 * MAX_AMPLITUDES:
            raise SimulationError("statevector batch too large")
        psi = X.reshape((2,) * self.m + (X.shape[1],))
        for op in self.ops:
            psi = op.act(psi)
        return psi.reshape(2 ** self.m, -1)

    def matrix(self) -> np.ndarray:
        if self.m > EXPLICIT_CAP:
            raise SimulationError(f"{self.m} qubits exceeds the explicit cap of {EXPLICIT_CAP}")
        return self.apply_batch(np.eye(2 ** self.m, dtype=complex))


def _all_qubits(op: Op):
    if isinstance(op, Controlled):
        yield from op.controls
        for inner in op.inner:
            yield from _all_qubits(inner)
    else:
        yield from op.qubits


def apply(U: Circuit, s: QState) -> QState:
    if U.m != s.m:
        raise SimulationError(f"circuit has {U.m} qubits, state has {s.m}")
    out = U.apply_batch(s.amps)
    return QState(s.m, out / np.linalg.norm(out))


def embed(circuit: Circuit, m: int, offset: int = 0) -> Circuit:
    """Place ``circuit`` on qubits ``offset..offset+circuit.m-1`` of a larger register."""
    ops = tuple(op.remap(lambda q: q + offset) for op in circuit.ops)
    return Circuit(m, ops, name=circuit.name)


def controlled(circuit: Circuit, controls, value: int = 1) -> Controlled:
    return Controlled(tuple(controls), value, circuit.ops)


# ---------------------------------------------------------------- basic gates

X_MAT = np.array([[0, 1], [1, 0]], dtype=complex)
H_MAT = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S_MAT = np.diag([1, 1j])


def x_gate(q: int) -> Gate:
    return Gate((q,), X_MAT, label="x")


def h_gate(q: int) -> Gate:
    return Gate((q,), H_MAT, label="h")


def bits_of(value: int, width: int) -> list[int]:
    return [(value >> (width - 1 - b)) & 1 for b in range(width)]


def register_values(width: int) -> np.ndarray:
    return np.arange(2 ** width)


def _joint(widths):
    """Split every joint basis index into per-register integer values."""
    total = sum(widths)
    idx = np.arange(2 ** total)
    parts, shift = [], total
    for w in widths:
        shift -= w
        parts.append((idx >> shift) & ((1 << w) - 1))
    return idx, parts


def _pack(parts, widths):
    out = np.zeros_like(parts[0])
    for p, w in zip(parts, widths):
        out = (out << w) | p
    return out


def mod_add_op(a_qubits, e_qubits, n: int, sign: int = 1, offset: int = 0) -> BasisMap:
    """``|a>|e> -> |a>|(e + sign*a + offset) mod n>`` (``a`` read modulo n)."""
    wa, we = len(a_qubits), len(e_qubits)
    _, (a, e) = _joint([wa, we])
    new_e = (e + sign * a + offset) % n
    dest = _pack([a, new_e], [wa, we])
    return BasisMap(
        tuple(a_qubits) + tuple(e_qubits), dest, np.ones(dest.size),
        gates=adder_cost(we), label="mod_add",
    )


def const_add_op(e_qubits, n: int, j: int, f: int = 1) -> BasisMap:
    """``|e> -> s |(e+j) mod n>`` with ``s = f`` on wraparound (the action of ``Z_f^j``)."""
    e = np.arange(2 ** len(e_qubits))
    dest = (e + j) % n
    phase = np.where(e >= n - j, complex(f), 1.0) if j > 0 else np.ones(e.size)
    return BasisMap(tuple(e_qubits), dest, phase, gates=adder_cost(len(e_qubits)), label="const_add")


def comparator_op(a_qubits, b_qubits, c_qubit: int) -> BasisMap:
    """``|a>|b>|c> -> |a>|b>|c XOR [a > b]>``; ``c`` stays 0 when ``b >= a``."""
    wa, wb = len(a_qubits), len(b_qubits)
    _, (a, b, c) = _joint([wa, wb, 1])
    dest = _pack([a, b, c ^ (a > b).astype(np.int64)], [wa, wb, 1])
    return BasisMap(
        tuple(a_qubits) + tuple(b_qubits) + (c_qubit,), dest, np.ones(dest.size),
        gates=comparator_cost(max(wa, wb)), label="comparator",
    )


def phase_flip_op(qubits, predicate, gates: int, label: str) -> Diagonal:
    """Diagonal ``(-1)**predicate(values...)`` over the given registers.

    ``qubits`` is a list of registers (lists of qubits); ``predicate`` gets one
    integer array per register.
    """
    widths = [len(r) for r in qubits]
    _, parts = _joint(widths)
    flip = predicate(*parts)
    phases = np.where(flip, -1.0, 1.0).astype(complex)
    flat = tuple(q for r in qubits for q in r)
    return Diagonal(flat, phases, gates=gates, label=label)


# ---------------------------------------------------------------- gadgets


def shift_power_circuit(n: int, f: int, j: int) -> Circuit:
    """Circuit for ``Z_f^j`` on a log n qubit register."""
    w = log2_int(n)
    if f not in (1, -1):
        raise SimulationError("f must be +1 or -1")
    if not 0 <= j <= n - 1:
        raise SimulationError(f"shift power {j} out of range 0..{n - 1}")
    return Circuit(w, (const_add_op(range(w), n, j, f),), name=f"Z_{f}^{j}")


def reversal_ops(qubits) -> list[Op]:
    return [x_gate(q) for q in qubits]


def reversal_circuit(n: int) -> Circuit:
    w = log2_int(n)
    return Circuit(w, tuple(reversal_ops(range(w))), name="J")


def arith_circuit(kind: str, n: int) -> Circuit:
    """Adder, subtractor or comparator on two log n registers (plus a flag for the comparator)."""
    w = log2_int(n)
    a, b = list(range(w)), list(range(w, 2 * w))
    if kind == "mod_adder":
        return Circuit(2 * w, (mod_add_op(a, b, n, +1),), name=kind)
    if kind == "mod_subtractor":
        return Circuit(2 * w, (mod_add_op(a, b, n, -1),), name=kind)
    if kind == "comparator":
        return Circuit(2 * w + 1, (comparator_op(a, b, 2 * w),), name=kind)
    raise SimulationError(f"unknown arithmetic circuit {kind!r}")


def f1_predicate(n: int):
    return lambda j, e: (j >= n) & (e >= 2 * n - j)


def f2_predicate():
    return lambda k, e: e > k


def phase_oracle_op(kind: str, idx_qubits, e_qubits, n: int) -> Diagonal:
    w = log2_int(n)
    if kind == "f1":
        return phase_flip_op([idx_qubits, e_qubits], f1_predicate(n), 2 * comparator_cost(w + 1) + 1, "f1")
    if kind == "f2":
        return phase_flip_op([idx_qubits, e_qubits], f2_predicate(), 2 * comparator_cost(w) + 1, "f2")
    raise SimulationError(f"unknown phase oracle {kind!r}")


def phase_oracle(kind: str, n: int, with_workspace: bool = False) -> Circuit:
    """Phase oracle ``(-1)^{f(j,e)}`` on ``|j>|e>``.

    f1 uses a log(2n) index register, f2 a log n one. With ``with_workspace``
    the oracle is spelled out as comparators writing into scratch qubits and
    a Toffoli onto a ``|->`` qubit; all scratch qubits start and end in 0.
    """
    w = log2_int(n)
    wj = w + 1 if kind == "f1" else w
    j, e = list(range(wj)), list(range(wj, wj + w))
    if not with_workspace:
        return Circuit(wj + w, (phase_oracle_op(kind, j, e, n),), name=kind)
    return _phase_oracle_workspace(kind, n, w, wj, j, e)


def _phase_oracle_workspace(kind, n, w, wj, j, e) -> Circuit:
    base = wj + w
    if kind == "f2":
        minus = base
        m = base + 1
        ops = [x_gate(minus), h_gate(minus), comparator_op(e, j, minus), h_gate(minus), x_gate(minus)]
        layout = RegisterLayout.from_sizes(("j", wj), ("e", w), ("minus", 1))
        return Circuit(m, tuple(ops), layout, name="f2_workspace")
    # f1: c1 = [j > n-1], c2 = [e > ~j] over log(2n) bits, then Toffoli(c1, c2) onto |->
    b = list(range(base, base + wj))
    c1, c2, minus = base + wj, base + wj + 1, base + wj + 2
    m = minus + 1
    load_const = [x_gate(b[t]) for t, bit in enumerate(bits_of(n - 1, wj)) if bit]
    copy_not = [Gate((j[t], b[t]), _cnot(), label="cx") for t in range(wj)] + [x_gate(q) for q in b]
    toffoli = Gate((c1, c2, minus), _toffoli(), gates=1, label="ccx")
    ops = (
        [x_gate(minus), h_gate(minus)]
        + load_const
        + [comparator_op(j, b, c1)]
        + load_const
        + copy_not
        + [comparator_op(e, b, c2)]
        + [toffoli]
        + [comparator_op(e, b, c2)]
        + [op.dagger() for op in reversed(copy_not)]
        + load_const
        + [comparator_op(j, b, c1)]
        + load_const
        + [h_gate(minus), x_gate(minus)]
    )
    layout = RegisterLayout.from_sizes(("j", wj), ("e", w), ("b", wj), ("c1", 1), ("c2", 1), ("minus", 1))
    return Circuit(m, tuple(ops), layout, name="f1_workspace")


def _cnot():
    U = np.eye(4, dtype=complex)
    U[2:, 2:] = X_MAT
    return U


def _toffoli():
    U = np.eye(8, dtype=complex)
    U[6:, 6:] = X_MAT
    return U


def zero_phase_op(qubits, phi: float) -> Diagonal:
    """Phase ``e^{i phi}`` on the all-zero string of ``qubits``."""
    ph = np.ones(2 ** len(qubits), dtype=complex)
    ph[0] = np.exp(1j * phi)
    return Diagonal(tuple(qubits), ph, gates=2 * len(qubits), label="zero_phase")


def global_phase_op(qubit: int, phase: complex) -> Diagonal:
    return Diagonal((qubit,), np.array([phase, phase], dtype=complex), gates=0, label="global")


# ---------------------------------------------------------------- select-U

LAYOUTS = ("shift", "grid", "compact")


def choose_layout(dec) -> str:
    from .displacement import word_slot

    inner_J = any(t.uses_J for t in dec.terms) and dec.j_position == "inner"
    if not inner_J and all(word_slot(dec.n, t.i, t.k) is not None for t in dec.terms):
        return "shift"
    return "grid"


def index_width(dec, layout: str) -> int:
    w = log2_int(dec.n)
    if layout == "shift":
        return w + 1
    if layout == "grid":
        return 2 * w
    if layout == "compact":
        return max(1, int(np.ceil(np.log2(max(len(dec.terms), 1)))))
    raise SimulationError(f"unknown select layout {layout!r}")


def index_of_term(dec, layout: str, pos: int) -> int:
    """Index-register value that selects the ``pos``-th term of ``dec``."""
    from .displacement import word_slot

    t = dec.terms[pos]
    if layout == "shift":
        slot = word_slot(dec.n, t.i, t.k)
        if slot is None:
            raise SimulationError(f"term ({t.i}, {t.k}) is not a pure shift word")
        return slot
    if layout == "grid":
        return t.i * dec.n + t.k
    return pos


def index_coefficients(dec, layout: str) -> np.ndarray:
    """Coefficient carried by every value of the index register (zero if unused)."""
    x = np.zeros(2 ** index_width(dec, layout), dtype=complex)
    for pos, t in enumerate(dec.terms):
        x[index_of_term(dec, layout, pos)] += t.coeff
    return x


def index_word(dec, layout: str, value: int):
    """``(i, k, uses_J)`` of the word applied for an index value, ``None`` for identity."""
    from .displacement import slot_word

    n = dec.n
    outer = dec.j_position == "outer"
    if layout == "shift":
        i, k = slot_word(n, value)
        return i, k, outer
    if layout == "grid":
        i, k = divmod(value, n)
        stein = dec.kind.value == "stein"
        return i, k, outer or stein
    if value < len(dec.terms):
        t = dec.terms[value]
        return t.i, t.k, t.uses_J
    return None


def select_u(dec, layout: str = "auto") -> Circuit:
    """``sum_w |w><w| (x) U_w`` on an index register followed by the system register."""
    if layout == "auto":
        layout = choose_layout(dec)
    n = dec.n
    w = log2_int(n)
    a = index_width(dec, layout)
    reg = RegisterLayout.from_sizes(("index", a), ("sys", w))
    idx, sys = reg["index"], reg["sys"]
    outer = dec.j_position == "outer"
    ops: list[Op] = []
    if layout == "shift":
        if any(t.uses_J for t in dec.terms) and not outer:
            raise SimulationError("shift layout cannot carry an inner reversal")
        if outer:
            ops += reversal_ops(sys)
        ops.append(phase_oracle_op("f1", idx, sys, n))
        ops.append(mod_add_op(idx, sys, n, +1))
    elif layout == "grid":
        i_reg, k_reg = idx[:w], idx[w:]
        if outer:
            ops += reversal_ops(sys)
        ops.append(phase_oracle_op("f2", k_reg, sys, n))
        ops.append(mod_add_op(k_reg, sys, n, -1, offset=-1))
        if dec.kind.value == "stein":
            ops += reversal_ops(sys)
        ops.append(mod_add_op(i_reg, sys, n, +1))
    elif layout == "compact":
        ops.append(_compact_select_op(dec, idx, sys))
    else:
        raise SimulationError(f"unknown select layout {layout!r}")
    return Circuit(a + w, tuple(ops), reg, name=f"select_{layout}")


def _compact_select_op(dec, idx, sys) -> BasisMap:
    from .displacement import word_matrix

    n = dec.n
    a, w = len(idx), len(sys)
    dest = np.arange(2 ** (a + w))
    phase = np.ones(dest.size, dtype=complex)
    for pos, t in enumerate(dec.terms):
        W = word_matrix(n, t.i, t.k, t.uses_J, dec.j_position)
        cols = np.arange(n)
        rows = np.argmax(np.abs(W), axis=0)
        dest[pos * n + cols] = pos * n + rows
        phase[pos * n + cols] = W[rows, cols]
    gates = len(dec.terms) * (adder_cost(w) + comparator_cost(w) + a)
    return BasisMap(tuple(idx) + tuple(sys), dest, phase, gates=gates, label="select_compact")


def select_dense_oracle(dec, layout: str = "auto") -> np.ndarray:
    """Block-diagonal reference for :func:`select_u`, assembled from dense word matrices."""
    from .displacement import word_matrix

    if layout == "auto":
        layout = choose_layout(dec)
    n = dec.n
    size = 2 ** index_width(dec, layout)
    out = np.zeros((size * n, size * n), dtype=complex)
    for v in range(size):
        word = index_word(dec, layout, v)
        W = np.eye(n) if word is None else word_matrix(n, *word, dec.j_position)
        out[v * n : (v + 1) * n, v * n : (v + 1) * n] = W
    return out
