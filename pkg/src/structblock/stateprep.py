"""State preparation: oracle-driven loading with fixed-point amplification,
amplitude estimation, exact (Long) amplification, sparse-support
superpositions and QRAM-tree loading.

All prepared amplitudes are principal square roots: for ``x = r e^{i t}``
with ``t`` in ``(-pi, pi]`` the amplitude is ``sqrt(r) e^{i t/2}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .simcore import (
    BasisMap,
    Circuit,
    Controlled,
    Diagonal,
    Gate,
    Multiplexed,
    QState,
    RegisterLayout,
    SimulationError,
    global_phase_op,
    h_gate,
    zero_phase_op,
)
from .structmat import log2_int


class PrepError(ValueError):
    pass


def principal_sqrt(x) -> np.ndarray:
    # adding +0.0 clears negative zeros so that -1 maps to +i
    x = np.asarray(x, dtype=complex) + 0.0
    return np.sqrt(x)


def target_state(x) -> np.ndarray:
    """``sum_i sqrt(x_i)|i> / sqrt(||x||_1)``."""
    x = np.asarray(x, dtype=complex)
    norm1 = np.abs(x).sum()
    if norm1 == 0:
        raise PrepError("all-zero vector has no state")
    return principal_sqrt(x) / np.sqrt(norm1)


def prep_gate(qubits, psi, gates: int | None = None) -> Gate:
    qubits = tuple(qubits)
    U = householder_prep(psi)
    return Gate(qubits, U, gates=gates if gates is not None else 2 ** len(qubits), label="prep")


def householder_prep(psi) -> np.ndarray:
    """Unitary whose first column is ``psi`` (normalized)."""
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    dim = psi.size
    phase = psi[0] / abs(psi[0]) if abs(psi[0]) > 1e-300 else 1.0
    t = np.conj(phase) * psi  # first entry real and nonnegative
    v = t.copy()
    v[0] -= 1.0
    nv = np.vdot(v, v).real
    if nv < 1e-30:
        return phase * np.eye(dim, dtype=complex)
    # reflection swapping e0 and t (both have real first entries, so <e0|t> is real)
    R = np.eye(dim, dtype=complex) - 2.0 * np.outer(v, v.conj()) / nv
    return phase * R


# ---------------------------------------------------------------- oracle


def quantize(values, bits: int, scale: float) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    step = scale * 2.0 ** (-bits)
    q = np.round(values.real / step) * step + 1j * (np.round(values.imag / step) * step)
    return q + 0.0


def required_bits(N: int, eps_p: float) -> int:
    """Fixed-point width for the value register that keeps loading error below ``eps_p``."""
    return int(np.ceil(np.log2(N / eps_p))) + 3


@dataclass
class AmplitudeOracle:
    """Black box ``|i>|0> -> |i>|x_i>`` with a fixed-point value register.

    ``cost_per_call`` counts underlying entry-oracle uses per invocation
    (two when the value is a sum or difference of two entries).
    """

    values: np.ndarray
    bits: int | None = None
    cost_per_call: int = 1
    queries: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if not np.all(np.isfinite(self.values)):
            raise PrepError("oracle values must be finite")

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def xmax(self) -> float:
        return float(np.abs(self.values).max())

    def read(self) -> np.ndarray:
        """Values as seen through the value register (one superposed call)."""
        self.queries += self.cost_per_call
        if self.bits is None or self.xmax == 0:
            return self.values.copy()
        return quantize(self.values, self.bits, self.xmax)

    @classmethod
    def from_config(cls, cfg: dict, n: int | None = None) -> "AmplitudeOracle":
        kind = cfg.get("kind", "table")
        bits = cfg.get("bits")
        if kind == "table":
            vals = [complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v) for v in cfg["values"]]
            return cls(np.array(vals), bits)
        if kind == "formula":
            if n is None:
                raise PrepError("formula oracle needs a domain size")
            i = np.arange(n)
            env = {"__builtins__": {}, "np": np, "i": i, "pi": np.pi, "j": 1j}
            vals = eval(cfg["values"], env)  # noqa: S307 - restricted namespace, numeric only
            return cls(np.broadcast_to(np.asarray(vals, dtype=complex), (n,)).copy(), bits)
        raise PrepError(f"unknown oracle kind {kind!r}")


# ---------------------------------------------------------------- fixed point


def chebyshev_T(L: int, x):
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) <= 1
    out = np.empty_like(x)
    out[inside] = np.cos(L * np.arccos(x[inside]))
    xo = x[~inside]
    out[~inside] = np.sign(xo) ** L * np.cosh(L * np.arccosh(np.abs(xo)))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PhaseSchedule:
    L: int
    l: int
    delta: float
    gamma: float
    phi: np.ndarray
    varphi: np.ndarray


def fixed_point_phase_schedule(l: int, delta: float) -> PhaseSchedule:
    if not 0 < delta < 1:
        raise PrepError(f"delta must lie in (0, 1), got {delta}")
    if l < 0:
        raise PrepError("l must be nonnegative")
    L = 2 * l + 1
    gamma = 1.0 / np.cosh(np.arccosh(1.0 / delta) / L)
    j = np.arange(1, l + 1)
    # -2 arccot(sqrt(1 - gamma^2) tan(2 pi j / L)), arccot taken on (0, pi)
    phi = -2.0 * np.arctan2(1.0, np.sqrt(1.0 - gamma ** 2) * np.tan(2 * np.pi * j / L))
    return PhaseSchedule(L, l, delta, float(gamma), phi, phi[::-1].copy())


def fixed_point_success(P0: float, L: int, delta: float) -> float:
    """``1 - delta^2 T_L(T_{1/L}(1/delta) sqrt(1 - P0))^2``."""
    ginv = np.cosh(np.arccosh(1.0 / delta) / L)
    return float(1.0 - delta ** 2 * chebyshev_T(L, ginv * np.sqrt(max(0.0, 1.0 - P0))) ** 2)


def required_L(P_min: float, delta: float) -> int:
    """Smallest odd ``L >= ln(2/delta)/sqrt(P_min)``."""
    if P_min <= 0:
        raise PrepError("P_min must be positive")
    L = int(np.ceil(np.log(2.0 / delta) / np.sqrt(min(P_min, 1.0)) - 1e-12))
    L = max(L, 1)
    return L if L % 2 else L + 1


def amplify_fixed_point(Ua: Circuit, flag: int, zero_qubits, sched: PhaseSchedule) -> Circuit:
    """``G_l ... G_1 U_a`` with ``G_j = -U_a S_a(phi_j) U_a^dag S_t(varphi_j)``.

    The good subspace is ``flag = 0``; ``S_a`` puts a phase on the all-zero
    string of ``zero_qubits``.
    """
    out = Ua
    for j in range(sched.l):
        St = Diagonal((flag,), np.array([np.exp(1j * sched.varphi[j]), 1.0]), gates=1, label="S_t")
        out = out.then(St, Ua.dagger(), zero_phase_op(zero_qubits, sched.phi[j]), Ua)
        out = out.then(global_phase_op(flag, -1.0))
    return out


# ---------------------------------------------------------------- amplitude estimation


@dataclass(frozen=True)
class AmplitudeEstimate:
    estimate: float
    lower: float
    zero_flag: bool
    prep_uses: int
    M: int
    runs: tuple = ()


def _ae_distribution(a: float, M: int) -> np.ndarray:
    theta = np.arcsin(np.sqrt(min(max(a, 0.0), 1.0))) / np.pi
    y = np.arange(M)

    def kernel(delta):
        num = np.sin(np.pi * M * delta)
        den = M * np.sin(np.pi * delta)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(np.abs(den) < 1e-12, 1.0, (num / np.where(den == 0, 1, den)) ** 2)
        return val

    p = 0.5 * kernel(y / M - theta) + 0.5 * kernel(y / M + theta)
    return p / p.sum()


def estimate_probability(a: float, eps0: float, rng, M_cap: int = 2 ** 20) -> tuple[float, int, int]:
    """One canonical amplitude-estimation run with doubling register size.

    Returns ``(estimate, M, prep_uses)``.
    """
    M, uses = 4, 0
    while True:
        p = _ae_distribution(a, M)
        y = rng.choice(M, p=p)
        est = float(np.sin(np.pi * y / M) ** 2)
        uses += 2 * M - 1
        if (est > 0 and M >= 3 * np.pi / (eps0 * np.sqrt(est))) or M >= M_cap:
            return est, M, uses
        M *= 2


def good_probability(amps: np.ndarray, m: int, flag: int, good_value: int = 0) -> float:
    psi = np.asarray(amps).reshape((2,) * m)
    sub = np.take(psi, good_value, axis=flag)
    return float(np.sum(np.abs(sub) ** 2))


def amplitude_estimate(prep: Circuit, flag: int, eps0: float = 0.5, seed=None, runs: int = 3) -> AmplitudeEstimate:
    """Median-of-``runs`` estimate of the good-flag probability of ``prep |0>``."""
    if eps0 <= 0:
        raise PrepError("eps0 must be positive")
    rng = np.random.default_rng(seed)
    v = np.zeros(2 ** prep.m, dtype=complex)
    v[0] = 1
    a = good_probability(prep.apply_batch(v), prep.m, flag)
    return estimate_from_probability(a, eps0, rng, runs)


def estimate_from_probability(a: float, eps0: float, rng, runs: int = 3) -> AmplitudeEstimate:
    if a <= 1e-15:
        return AmplitudeEstimate(0.0, 0.0, True, 0, 0)
    results = [estimate_probability(a, eps0, rng) for _ in range(runs)]
    ests = sorted(r[0] for r in results)
    med = float(np.median(ests))
    uses = sum(r[2] for r in results)
    M = max(r[1] for r in results)
    return AmplitudeEstimate(med, med / (1 + eps0), med == 0.0, uses, M, tuple(ests))


def ae_prep_uses(P0: float, eps0: float = 0.5, runs: int = 3) -> int:
    """Closed-form cost of :func:`estimate_from_probability` when every run lands on ``P0``."""
    M, uses = 4, 0
    while M < 3 * np.pi / (eps0 * np.sqrt(P0)):
        uses += 2 * M - 1
        M *= 2
    uses += 2 * M - 1
    return runs * uses


# ---------------------------------------------------------------- steerable loading


def flag_rotation_blocks(amps) -> np.ndarray:
    """2x2 unitaries with first column ``(a, sqrt(1 - |a|^2))``."""
    a = np.asarray(amps, dtype=complex)
    mod = np.abs(a)
    if np.any(mod > 1 + 1e-12):
        raise PrepError("flag amplitude exceeds one")
    a = np.where(mod > 1, a / np.maximum(mod, 1e-300), a)
    s = np.sqrt(np.clip(1 - np.abs(a) ** 2, 0, None))
    blocks = np.empty((a.size, 2, 2), dtype=complex)
    blocks[:, 0, 0] = a
    blocks[:, 1, 0] = s
    blocks[:, 0, 1] = -s
    blocks[:, 1, 1] = np.conj(a)
    return blocks


def truncate_rotation(amps, eps_r: float) -> np.ndarray:
    """Round the rotation and phase angles behind each amplitude to a grid of ``eps_r``."""
    a = np.asarray(amps, dtype=complex)
    theta = np.arccos(np.clip(np.abs(a), 0, 1))
    phi = np.angle(a)
    theta = np.round(theta / eps_r) * eps_r
    phi = np.round(phi / eps_r) * eps_r
    return np.cos(np.clip(theta, 0, np.pi / 2)) * np.exp(1j * phi)


@dataclass(frozen=True)
class LoadingPlan:
    """Everything needed to rebuild one steerable loading circuit."""

    amplitudes: np.ndarray  # flag-0 amplitude per index value, before amplification
    P0: float
    P_min: float
    L: int
    schedule: PhaseSchedule | None
    estimate: AmplitudeEstimate | None
    bits: int | None
    eps_r: float


def loading_amplitudes(values, N: int, conjugate: bool = False) -> np.ndarray:
    """Flag-0 amplitude ``sqrt(x_i/|x|_max)`` (or its conjugate)."""
    values = np.asarray(values, dtype=complex)
    xm = np.abs(values).max()
    if xm == 0:
        raise PrepError("all-zero amplitudes")
    r = principal_sqrt(values) / np.sqrt(xm)
    return np.conj(r) if conjugate else r


def plan_loading(
    oracle: AmplitudeOracle,
    support_size: int,
    delta: float,
    eps_p: float,
    seed=None,
    rotation: str = "exact",
    amplify: bool = True,
    l: int | None = None,
) -> LoadingPlan:
    """Choose bits, P_min and the phase schedule for loading ``oracle`` over ``support_size`` positions."""
    if not 0 < eps_p < 1:
        raise PrepError(f"eps_p must lie in (0, 1), got {eps_p}")
    if not 0 < delta < 1:
        raise PrepError(f"delta must lie in (0, 1), got {delta}")
    need = required_bits(support_size, eps_p)
    if oracle.bits is None:
        oracle.bits = need
    elif oracle.bits < need:
        raise PrepError(f"oracle width {oracle.bits} too small, need {need} bits for eps_p={eps_p}")
    vals = oracle.read()
    if np.abs(vals).max() == 0:
        raise PrepError("all-zero oracle values")
    amps = loading_amplitudes(vals, support_size)
    P0 = float(np.sum(np.abs(amps) ** 2) / support_size)
    eps_r = 0.0
    if rotation == "finite":
        eps_r = eps_p * np.sqrt(P0) / np.sqrt(support_size)
        amps = truncate_rotation(amps, eps_r)
    elif rotation != "exact":
        raise PrepError(f"unknown rotation mode {rotation!r}")
    if not amplify:
        return LoadingPlan(amps, P0, P0, 1, None, None, oracle.bits, eps_r)
    est = None
    if l is None:
        rng = np.random.default_rng(seed)
        est = estimate_from_probability(P0, 0.5, rng)
        if est.zero_flag:
            raise PrepError("amplitude estimate is zero")
        P_min = est.lower
        L = required_L(P_min, delta)
        # an estimate of exactly 1 pins P0 >= cos^2(pi/2M); skip amplification if that already suffices
        if est.estimate >= 1 - 1e-12 and np.cos(np.pi / (2 * est.M)) ** 2 >= 1 - delta ** 2:
            P_min, L = est.estimate, 1
    else:
        P_min = P0
        L = 2 * l + 1
    sched = fixed_point_phase_schedule((L - 1) // 2, delta)
    return LoadingPlan(amps, P0, P_min, L, sched, est, oracle.bits, eps_r)


def loading_circuit(base: Circuit, idx, flag: int, zero_qubits, amps, sched, queries_per_use: int) -> Circuit:
    """``U_a`` (base preparation, then the flag rotation) amplified with ``sched``."""
    blocks = flag_rotation_blocks(amps)
    rot = Multiplexed(tuple(idx), (flag,), blocks, gates=4 * len(idx), queries=queries_per_use, label="rotate")
    Ua = base.then(rot)
    if sched is None or sched.l == 0:
        return Ua
    return amplify_fixed_point(Ua, flag, zero_qubits, sched)


@dataclass(frozen=True)
class PrepReport:
    fidelity: float
    P0: float
    P_min: float
    P_L: float
    P_L_formula: float
    L: int
    queries: int
    gates: int
    junk_norm: float
    bits: int | None
    notes: str = "junk part bounded worst-case; amplitude-estimation confidence reported separately"

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def steerable_prep(
    oracle: AmplitudeOracle,
    n: int | None = None,
    delta: float = 0.1,
    eps_p: float = 1e-3,
    seed=None,
    rotation: str = "exact",
    l: int | None = None,
) -> tuple[QState, PrepReport]:
    """Prepare ``sum_i sqrt(x_i)|i>|0> + junk |1>`` on an index register plus flag.

    Returns the full output state (flag is the last qubit) and a report.
    """
    n = oracle.size if n is None else n
    if oracle.size != n:
        raise PrepError("oracle domain does not match n")
    w = log2_int(n)
    if np.abs(oracle.values).max() == 0:
        raise PrepError("all-zero vector")
    q0 = oracle.queries
    plan = plan_loading(oracle, n, delta, eps_p, seed, rotation, l=l)
    idx, flag = list(range(w)), w
    base = Circuit(w + 1, tuple(h_gate(q) for q in idx))
    circ = loading_circuit(base, idx, flag, list(range(w + 1)), plan.amplitudes, plan.schedule, oracle.cost_per_call * 2)
    v = np.zeros(2 ** (w + 1), dtype=complex)
    v[0] = 1
    out = circ.apply_batch(v)
    good = out.reshape(n, 2)[:, 0]
    P_L = float(np.vdot(good, good).real)
    fid = float(abs(np.vdot(target_state(oracle.values), good)) ** 2 / P_L) if P_L > 0 else 0.0
    uses = plan.L + (plan.estimate.prep_uses if plan.estimate else 0)
    oracle.queries = q0 + oracle.cost_per_call * 2 * uses + oracle.cost_per_call
    tally = circ.tally()
    report = PrepReport(
        fidelity=min(fid, 1.0),
        P0=plan.P0,
        P_min=plan.P_min,
        P_L=P_L,
        P_L_formula=fixed_point_success(plan.P0, plan.L, delta),
        L=plan.L,
        queries=oracle.queries - q0,
        gates=tally.gates,
        junk_norm=float(np.sqrt(max(0.0, 1 - P_L))),
        bits=plan.bits,
    )
    return QState(w + 1, out / np.linalg.norm(out)), report


def on_success(state: QState) -> QState:
    """Project the last (flag) qubit onto 0 and renormalize."""
    good = state.amps.reshape(-1, 2)[:, 0]
    return QState.from_vector(good)


# ---------------------------------------------------------------- Long's amplification


def long_parameters(p: float) -> tuple[int, float]:
    """Iteration count and phase for exact amplification from success probability ``p``."""
    if p <= 0:
        raise PrepError("zero good amplitude")
    if p >= 1 - 1e-12:
        return 0, 0.0
    theta = np.arcsin(np.sqrt(p))
    J = int(np.floor(np.pi / (4 * theta) - 0.5))
    phi = 2 * np.arcsin(np.sin(np.pi / (4 * J + 6)) / np.sin(theta))
    return J + 1, float(phi)


def long_aa(state, good, amplitude: float) -> QState:
    """Exactly rotate ``state`` into the subspace selected by the boolean mask ``good``."""
    s = np.asarray(state.amps if isinstance(state, QState) else state, dtype=complex)
    good = np.asarray(good, dtype=bool)
    p = float(abs(amplitude) ** 2)
    if abs(p - np.sum(np.abs(s[good]) ** 2)) > 1e-9:
        raise PrepError("declared amplitude does not match the state")
    iters, phi = long_parameters(p)
    psi = s.copy()
    for _ in range(iters):
        psi = np.where(good, np.exp(1j * phi) * psi, psi)
        psi = -(psi + (np.exp(1j * phi) - 1) * s * np.vdot(s, psi))
    return QState.from_vector(psi)


def long_aa_circuit(A: Circuit, good_phase, zero_qubits, p: float) -> Circuit:
    """Exact amplification of ``A|0>``; ``good_phase(phi)`` returns the good-subspace phase op."""
    iters, phi = long_parameters(p)
    out = A
    for _ in range(iters):
        out = out.then(good_phase(phi), A.dagger(), zero_phase_op(zero_qubits, phi), A)
        out = out.then(global_phase_op(zero_qubits[0], -1.0))
    return out


# ---------------------------------------------------------------- sparse support


def _positions_table(positions, n: int, d: int) -> np.ndarray:
    if d < 1 or d > n:
        raise PrepError(f"need 1 <= d <= n, got d={d}")
    table = np.zeros((n, d), dtype=np.int64)
    table[0] = np.arange(d)
    for i in range(1, n):
        row = [int(positions(i, m)) if callable(positions) else int(positions[i][m]) for m in range(d)]
        if len(set(row)) != d or min(row) < 0 or max(row) >= n:
            raise PrepError(f"position oracle is not injective on row {i}")
        table[i] = row
    return table


def sparse_support_circuit(positions, n: int, d: int, m_total: int | None = None, offset: int = 0) -> tuple[Circuit, RegisterLayout, dict]:
    """Circuit preparing the uniform superposition over the displacement support.

    Registers: ``reg1`` (1 qubit), ``reg2`` (row), ``reg3`` (column). The
    support is every ``(0, k)`` plus ``(i, f(i, m))`` for ``i >= 1`` and
    ``m < d``; ``reg1`` ends in 0. Returns the circuit, its layout and the
    intermediate success probabilities.
    """
    w = log2_int(n)
    table = _positions_table(positions, n, d)
    m = (2 * w + 1) if m_total is None else m_total
    r1 = offset
    r2 = list(range(offset + 1, offset + 1 + w))
    r3 = list(range(offset + 1 + w, offset + 1 + 2 * w))
    layout = RegisterLayout.from_sizes(("reg1", 1), ("reg2", w), ("reg3", w))
    zero = [r1] + r2 + r3

    uniform_d = np.zeros(n, dtype=complex)
    uniform_d[:d] = 1
    stage1 = Circuit(m, (h_gate(r1), *[h_gate(q) for q in r2], prep_gate(r3, uniform_d, gates=4 * w)))
    p1 = (d + 1) / (2 * d)

    def good1(phi):
        # good: reg1 = 1 or reg3 = 0
        ph = np.ones(2 ** (1 + w), dtype=complex)
        for b in range(2):
            for c in range(n):
                if b == 1 or c == 0:
                    ph[b * n + c] = np.exp(1j * phi)
        return Diagonal((r1, *r3), ph, gates=2 * w + 2, label="good1")

    A1 = long_aa_circuit(stage1, good1, zero, p1)

    swap = tuple(Gate((a, b), _swap(), gates=3, label="swap") for a, b in zip(r2, r3))
    dest = np.zeros(n * n, dtype=np.int64)
    for i in range(n):
        perm = _extend_permutation(table[i], n)
        dest[i * n + np.arange(n)] = i * n + perm
    place = BasisMap(tuple(r2 + r3), dest, np.ones(n * n), gates=adder_cost_like(w), queries=1, label="positions")
    A2 = A1.then(Controlled((r1,), 0, swap), Controlled((r1,), 1, (place,)))
    support = n + (n - 1) * d
    p2 = support / (n * (d + 1))

    def good2(phi):
        # bad: reg1 = 1 and reg2 = 0
        ph = np.full(2 ** (1 + w), np.exp(1j * phi), dtype=complex)
        ph[n] = 1.0
        return Diagonal((r1, *r2), ph, gates=2 * w + 2, label="good2")

    A3 = long_aa_circuit(A2, good2, zero, p2)
    dest1 = np.arange(2 ** (1 + w))
    for b in range(2):
        for i in range(1, n):
            dest1[b * n + i] = (1 - b) * n + i
    clear = BasisMap((r1, *r2), dest1, np.ones(dest1.size), gates=2 * w, label="clear_reg1")
    circ = A3.then(clear)
    return circ, layout, {"stage1": p1, "stage2": p2, "support": support, "table": table}


def adder_cost_like(w: int) -> int:
    return 6 * max(w, 1)


def _swap():
    U = np.zeros((4, 4), dtype=complex)
    U[0, 0] = U[3, 3] = U[1, 2] = U[2, 1] = 1
    return U


def _extend_permutation(row, n: int) -> np.ndarray:
    perm = np.full(n, -1, dtype=np.int64)
    perm[: len(row)] = row
    free = [c for c in range(n) if c not in set(row)]
    perm[len(row):] = free
    return perm


def sparse_support_prep(positions, n: int, d: int) -> QState:
    circ, _, _ = sparse_support_circuit(positions, n, d)
    v = np.zeros(2 ** circ.m, dtype=complex)
    v[0] = 1
    out = circ.apply_batch(v)
    return QState(circ.m, out / np.linalg.norm(out))


def support_grid(state: QState, n: int) -> np.ndarray:
    """``(row, col)`` amplitude grid of a sparse-support state whose reg1 is 0."""
    return state.amps[: n * n].reshape(n, n)


# ---------------------------------------------------------------- QRAM tree


@dataclass(frozen=True)
class QramTree:
    leaves: np.ndarray
    levels: tuple  # levels[0] = root sums, levels[-1] = leaf moduli

    @property
    def n(self) -> int:
        return self.leaves.size

    @property
    def root(self) -> float:
        return float(self.levels[0][0])

    @property
    def memory_entries(self) -> int:
        return sum(len(lv) for lv in self.levels)

    def nodes(self) -> list[float]:
        """Internal nodes in heap order (root first), leaves excluded."""
        return [float(v) for lv in self.levels[:-1] for v in lv]

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "leaves": [[float(v.real), float(v.imag)] for v in self.leaves],
            "nodes": self.nodes(),
        }

    def check(self, tol: float = 1e-12) -> None:
        for parent, child in zip(self.levels[:-1], self.levels[1:]):
            if np.max(np.abs(parent - child[0::2] - child[1::2])) > tol * max(1.0, parent.max()):
                raise PrepError("tree node is not the sum of its children")


def qram_build(x) -> QramTree:
    x = np.asarray(x, dtype=complex).reshape(-1)
    log2_int(x.size)
    if np.all(x == 0):
        raise PrepError("cannot build a tree over the zero vector")
    levels = [np.abs(x)]
    while levels[-1].size > 1:
        lv = levels[-1]
        levels.append(lv[0::2] + lv[1::2])
    levels.reverse()
    for lv in levels:
        lv.setflags(write=False)
    leaves = x.copy()
    leaves.setflags(write=False)
    return QramTree(leaves, tuple(levels))


def qram_bits(depth: int, eps_p: float | None) -> int | None:
    """Angle precision for an ``eps_p`` loading over ``depth`` levels (``None`` is exact)."""
    if eps_p is None:
        return None
    return int(np.ceil(np.log2(max(depth, 1) * np.pi / eps_p))) + 1


def _quantize_angle(a, bits):
    if bits is None:
        return a
    step = np.pi * 2.0 ** (-bits)
    return np.round(a / step) * step


def _ry_blocks(left, right, bits):
    parent = left + right
    safe = np.where(parent > 0, parent, 1.0)
    ang = np.where(parent > 0, np.arctan2(np.sqrt(right / safe), np.sqrt(left / safe)), 0.0)
    ang = _quantize_angle(ang, bits)
    c, s = np.cos(ang), np.sin(ang)
    blocks = np.empty((ang.size, 2, 2), dtype=complex)
    blocks[:, 0, 0], blocks[:, 0, 1] = c, -s
    blocks[:, 1, 0], blocks[:, 1, 1] = s, c
    return blocks


def qram_level_gates(level: int, bits: int | None) -> int:
    b = bits if bits is not None else 1
    return (level + 1) * b + 1


def _tree_ops(trees, ctrl, target, eps_p, conjugate):
    """Cascade for one or several trees; ``ctrl`` selects the tree (may be empty)."""
    w = len(target)
    bits = qram_bits(w, eps_p)
    ops = []
    for lvl in range(w):
        blocks = []
        for tr in trees:
            child = tr.levels[lvl + 1]
            blocks.append(_ry_blocks(child[0::2], child[1::2], bits))
        blocks = np.concatenate(blocks, axis=0)
        ops.append(
            Multiplexed(tuple(ctrl) + tuple(target[:lvl]), (target[lvl],), blocks,
                        gates=qram_level_gates(lvl + len(ctrl), bits), label=f"qram_level{lvl}")
        )
    phases = []
    for tr in trees:
        ang = np.angle(tr.leaves + 0.0) / 2
        ang = _quantize_angle(ang, bits)
        phases.append(np.exp(-1j * ang) if conjugate else np.exp(1j * ang))
    ops.append(Diagonal(tuple(ctrl) + tuple(target), np.concatenate(phases),
                        gates=qram_level_gates(w + len(ctrl), bits), label="qram_phase"))
    return ops


def qram_prep_circuit(tree: QramTree, eps_p: float | None = None, conjugate: bool = False,
                      qubits=None, m: int | None = None) -> Circuit:
    w = log2_int(tree.n)
    qubits = list(range(w)) if qubits is None else list(qubits)
    m = w if m is None else m
    return Circuit(m, tuple(_tree_ops([tree], [], qubits, eps_p, conjugate)), name="qram_prep")


def qram_prep(tree: QramTree, eps_p: float | None = None, conjugate: bool = False) -> QState:
    circ = qram_prep_circuit(tree, eps_p, conjugate)
    v = np.zeros(2 ** circ.m, dtype=complex)
    v[0] = 1
    out = circ.apply_batch(v)
    return QState(circ.m, out / np.linalg.norm(out))


def qram_prep_pair(first: QramTree, second: QramTree, eps_p: float | None = None, conjugate: bool = False) -> Circuit:
    """Load the concatenation of two trees: a top rotation from the two roots, then each tree under control."""
    if first.n != second.n:
        raise PrepError("paired trees must have equal size")
    w = log2_int(first.n)
    top = qram_build(np.array([first.root, second.root]))
    bits = qram_bits(w + 1, eps_p)
    ops = [Multiplexed((), (0,), _ry_blocks(np.array([top.levels[1][0]]), np.array([top.levels[1][1]]), bits),
                       gates=qram_level_gates(0, bits), label="qram_top")]
    ops += _tree_ops([first, second], [0], list(range(1, w + 1)), eps_p, conjugate)
    return Circuit(w + 1, tuple(ops), name="qram_pair")


def qram_row_maps(row_trees, norm_tree: QramTree, eps_p: float | None = None):
    """Operators ``P``, ``P'`` (conjugate amplitudes) and ``Q`` on a row register then a column register."""
    n = norm_tree.n
    if len(row_trees) != n or any(t is None for t in row_trees):
        raise PrepError("every row needs a tree")
    w = log2_int(n)
    rows, cols = list(range(w)), list(range(w, 2 * w))
    P = Circuit(2 * w, tuple(_tree_ops(row_trees, rows, cols, eps_p, False)), name="P")
    Pc = Circuit(2 * w, tuple(_tree_ops(row_trees, rows, cols, eps_p, True)), name="P_conj")
    Q = Circuit(2 * w, tuple(_tree_ops([norm_tree], [], rows, eps_p, False)), name="Q")
    return P, Pc, Q


def safe_tree(x) -> QramTree:
    """Tree over ``x``; an all-zero row gets a placeholder tree that loads ``|0>``."""
    x = np.asarray(x, dtype=complex)
    if np.all(x == 0):
        t = qram_build(np.eye(x.size)[0])
        return QramTree(x.copy(), tuple(np.zeros_like(lv) for lv in t.levels))
    return qram_build(x)
