"""Consumers of block-encodings: postselected application, a reference
inverse, error budgeting and spectral diagnostics, and Hadamard-test
inner products.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blockenc import VERIFY_TOL, BlockEncoding, extract_block
from .displacement import lcu_decompose_structured
from .simcore import Circuit, Controlled, Gate, H_MAT, QState, S_MAT
from .stateprep import householder_prep
from .structmat import StructuredMatrix, hermitian_toeplitz

KAPPA_MAX = 1e8


class SolverError(ValueError):
    pass


def _input_batch(be: BlockEncoding, b) -> np.ndarray:
    b = np.asarray(b.amps if isinstance(b, QState) else b, dtype=complex)
    s = be.system_qubits
    if b.size != 2 ** s:
        raise SolverError(f"state of size {b.size} does not match a {2 ** s}-dimensional system")
    v = np.zeros(2 ** be.circuit.m, dtype=complex)
    v[: 2 ** s] = b / np.linalg.norm(b)
    return v


def apply_and_postselect(be: BlockEncoding, b) -> tuple[QState, float]:
    """Run the encoding on ``|0>^a|b>`` and keep the all-zero ancilla branch."""
    out = be.circuit.apply_batch(_input_batch(be, b))
    kept = out[: 2 ** be.system_qubits]
    prob = float(np.vdot(kept, kept).real)
    if prob < 1e-300:
        raise SolverError("postselection probability is zero")
    return QState.from_vector(kept), prob


@dataclass(frozen=True)
class SolveReport:
    solution: np.ndarray
    kappa: float
    success_probability: float
    fidelity: float | None
    delta: float | None
    raw_solution: np.ndarray
    queries: int
    gates: int

    def as_dict(self) -> dict:
        return {
            "solution": [[float(v.real), float(v.imag)] for v in self.solution],
            "kappa": self.kappa,
            "success_probability": self.success_probability,
            "fidelity": self.fidelity,
            "delta": self.delta,
            "queries": self.queries,
            "gates": self.gates,
        }


def condition_number(B) -> float:
    s = np.linalg.svd(np.asarray(B, dtype=complex), compute_uv=False)
    if s[-1] == 0:
        return float("inf")
    return float(s[0] / s[-1])


def solve_reference(be: BlockEncoding, b, M=None, eps: float | None = None, kappa_max: float = KAPPA_MAX) -> SolveReport:
    """Invert the encoded block classically and return the normalized solution.

    This stands in for a quantum linear-system solver with the same output
    contract. The block must be Hermitian up to the encoding error.
    """
    B = extract_block(be.circuit, be.a, be.alpha)
    herm_gap = float(np.linalg.norm(B - B.conj().T, 2))
    if herm_gap > 2 * be.epsilon_bound + VERIFY_TOL:
        raise SolverError(
            f"encoded block is not Hermitian (gap {herm_gap:.2e}); complement it to a Hermitian extension first"
        )
    kappa = condition_number(B)
    if not np.isfinite(kappa) or kappa > kappa_max:
        raise SolverError(f"condition number {kappa:.3g} exceeds the cap {kappa_max:.3g}")
    b = np.asarray(b.amps if isinstance(b, QState) else b, dtype=complex)
    raw = np.linalg.solve(B, b)
    x = raw / np.linalg.norm(raw)
    fid = None
    if M is not None:
        ref = np.linalg.solve(np.asarray(M, dtype=complex), b)
        fid = float(abs(np.vdot(ref / np.linalg.norm(ref), x)) ** 2)
    _, prob = apply_and_postselect(be, x)
    delta = error_budget(kappa, eps) if eps is not None and kappa > 2 else None
    return SolveReport(x, kappa, prob, fid, delta, raw, be.tally.queries, be.tally.gates)


def error_budget(kappa: float, eps: float) -> float:
    """Encoding precision ``eps / (kappa^2 ln^3(kappa/eps))`` (constant 1, natural log)."""
    if kappa <= 2:
        raise SolverError("error budget needs kappa > 2")
    if not 0 < eps < 1:
        raise SolverError("eps must lie in (0, 1)")
    return float(eps / (kappa ** 2 * np.log(kappa / eps) ** 3))


@dataclass(frozen=True)
class WienerCheck:
    in_class: bool
    abs_sum: float
    chi: float
    chi_bound_ok: bool


def wiener_class_check(t, rho: float) -> WienerCheck:
    """``t`` holds ``t_{-(n-1)} .. t_{n-1}``; membership means ``sum |t_j| < rho``."""
    t = np.asarray(t, dtype=complex)
    n = (t.size + 1) // 2
    total = float(np.abs(t).sum())
    chi = lcu_decompose_structured(StructuredMatrix("toeplitz", n, t)).chi
    in_class = total < rho
    ok = chi < 2 * rho if in_class else True
    if in_class and not ok:
        raise AssertionError("chi bound violated for a Wiener-class sequence")
    return WienerCheck(in_class, total, chi, ok)


@dataclass(frozen=True)
class GeneratingBounds:
    f_min: float
    f_max: float
    kappa_bound: float
    bounded: bool


def generating_fn_bounds(samples) -> GeneratingBounds:
    f = np.asarray(samples, dtype=float)
    f_min, f_max = float(f.min()), float(f.max())
    if f_min <= 0:
        return GeneratingBounds(f_min, f_max, float("inf"), False)
    return GeneratingBounds(f_min, f_max, f_max / f_min, True)


def fourier_coefficients(samples, n: int) -> np.ndarray:
    """``t_k = (1/2pi) int f(l) e^{-ikl} dl`` for ``|k| < n`` from uniform samples on ``[0, 2pi)``."""
    f = np.asarray(samples, dtype=complex)
    c = np.fft.fft(f) / f.size
    k = np.arange(-(n - 1), n)
    return c[k % f.size]


def toeplitz_from_symbol(samples, n: int) -> np.ndarray:
    t = fourier_coefficients(samples, n)
    return StructuredMatrix("toeplitz", n, t).dense


# ---------------------------------------------------------------- Hadamard test


def hadamard_probabilities(u, w) -> tuple[float, float]:
    """Probability of reading 0 on the control in the real and imaginary Hadamard tests.

    Simulated on a control qubit plus the data register: prepare
    ``(|0>|u> + |1>|w>)/sqrt(2)``, optionally apply ``S^dag`` to the control,
    then a Hadamard.
    """
    u = np.asarray(u.amps if isinstance(u, QState) else u, dtype=complex)
    w = np.asarray(w.amps if isinstance(w, QState) else w, dtype=complex)
    if u.size != w.size:
        raise SolverError("states have different dimensions")
    s = int(np.log2(u.size))
    Uu, Uw = householder_prep(u), householder_prep(w)
    data = tuple(range(1, s + 1))
    probs = []
    for imag in (False, True):
        ops = [
            Gate((0,), H_MAT, label="h"),
            Controlled((0,), 0, (Gate(data, Uu, label="prep_u"),)),
            Controlled((0,), 1, (Gate(data, Uw, label="prep_w"),)),
        ]
        if imag:
            ops.append(Gate((0,), S_MAT.conj().T, label="sdg"))
        ops.append(Gate((0,), H_MAT, label="h"))
        v = np.zeros(2 ** (s + 1), dtype=complex)
        v[0] = 1
        out = Circuit(s + 1, tuple(ops)).apply_batch(v)
        probs.append(float(np.sum(np.abs(out[: 2 ** s]) ** 2)))
    return probs[0], probs[1]


def hadamard_test_inner(u, w, shots: int, seed=None) -> complex:
    """Shot-based estimate of ``<u|w>``."""
    if shots < 1:
        raise SolverError("shots must be positive")
    rng = np.random.default_rng(seed)
    p_re, p_im = hadamard_probabilities(u, w)
    k_re = rng.binomial(shots, min(max(p_re, 0.0), 1.0))
    k_im = rng.binomial(shots, min(max(p_im, 0.0), 1.0))
    return complex(2 * k_re / shots - 1, 2 * k_im / shots - 1)


def ar1_autocovariance(a: float, sigma2: float, lags) -> np.ndarray:
    lags = np.abs(np.asarray(lags))
    return sigma2 * a ** lags / (1 - a * a)


def ar1_spectral_density(a: float, sigma2: float, lam) -> np.ndarray:
    return sigma2 / np.abs(1 - a * np.exp(1j * np.asarray(lam))) ** 2


def hermitian_toeplitz_from_autocov(r) -> StructuredMatrix:
    """Matrix with entries ``r(k - i)`` and ``r(-k) = conj(r(k))``."""
    return hermitian_toeplitz(r)
