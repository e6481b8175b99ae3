"""One-step linear prediction by solving the Wiener-Hopf system through a
block-encoding of the autocovariance matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blockenc import AccessModel, encode, verify_block_encoding
from .solver import (
    SolverError,
    ar1_autocovariance,
    ar1_spectral_density,
    fourier_coefficients,
    generating_fn_bounds,
    hadamard_test_inner,
    hermitian_toeplitz_from_autocov,
    solve_reference,
    wiener_class_check,
)
from .structmat import is_power_of_two


@dataclass(frozen=True)
class PredictionTask:
    n: int
    a: float | None = None
    sigma2: float = 1.0
    r: tuple | None = None  # explicit r(0..n)
    past: tuple | None = None  # u(i-1), ..., u(i-n)
    shots: int = 100_000

    def __post_init__(self):
        if not is_power_of_two(self.n) or self.n < 2:
            raise ValueError(f"filter order must be a power of two >= 2, got {self.n}")
        if self.r is None and self.a is None:
            raise ValueError("give either AR(1) parameters or an explicit autocovariance")
        if self.a is not None and not abs(self.a) < 1:
            raise ValueError("AR(1) coefficient must satisfy |a| < 1")
        if self.r is not None and len(self.r) < self.n + 1:
            raise ValueError(f"need r(0..{self.n})")
        if self.past is not None and len(self.past) != self.n:
            raise ValueError(f"need {self.n} past samples")
        if self.shots < 1:
            raise ValueError("shots must be positive")

    def autocovariance(self) -> np.ndarray:
        if self.r is not None:
            r = np.asarray(self.r, dtype=complex)[: self.n + 1]
        else:
            r = ar1_autocovariance(self.a, self.sigma2, np.arange(self.n + 1)).astype(complex)
        if r[0].real <= 0:
            raise ValueError("r(0) must be positive")
        return r


def ar1_path(a: float, sigma2: float, length: int, seed=None) -> np.ndarray:
    """Stationary AR(1) sample path ``u(j) = a u(j-1) + v(j)``."""
    rng = np.random.default_rng(seed)
    u = np.empty(length)
    u[0] = rng.normal(scale=np.sqrt(sigma2 / (1 - a * a)))
    for j in range(1, length):
        u[j] = a * u[j - 1] + rng.normal(scale=np.sqrt(sigma2))
    return u


def spectral_autocovariance(a: float, sigma2: float, n: int, samples: int = 4096) -> np.ndarray:
    lam = 2 * np.pi * np.arange(samples) / samples
    f = ar1_spectral_density(a, sigma2, lam)
    # r(k) = (1/2pi) int f e^{ikl} dl, the conjugate of the forward coefficient
    return np.conj(fourier_coefficients(f, n + 1)[n:])


def run_prediction(task: PredictionTask, model: str = "blackbox", eps: float = 1e-3,
                   exact_prep: bool = False, seed: int = 0) -> dict:
    n = task.n
    r = task.autocovariance()
    report: dict = {"n": n, "model": model, "eps": eps, "seed": seed, "shots": task.shots,
                    "exact_prep": exact_prep}
    if task.a is not None and task.r is None:
        spectral_r = spectral_autocovariance(task.a, task.sigma2, n)
        report["autocov_selfcheck"] = float(np.max(np.abs(spectral_r - r)))
        lam = 2 * np.pi * np.arange(128 * n) / (128 * n)
        gb = generating_fn_bounds(ar1_spectral_density(task.a, task.sigma2, lam))
        report["f_min"], report["f_max"], report["kappa_bound"] = gb.f_min, gb.f_max, gb.kappa_bound

    S = hermitian_toeplitz_from_autocov(r[:n])
    R = S.dense
    p = np.conj(r[1 : n + 1])
    eig = np.linalg.eigvalsh(R)
    if eig[0] <= 0:
        raise SolverError("autocovariance matrix is not positive definite")
    w_classical = np.linalg.solve(R, p)
    wc = wiener_class_check(S.seq, rho=float(np.abs(S.seq).sum()) * 1.0001)
    report["wiener"] = {"in_class": wc.in_class, "abs_sum": wc.abs_sum, "chi": wc.chi}
    report["kappa_dense"] = float(eig[-1] / eig[0])

    if task.past is not None:
        u = np.asarray(task.past, dtype=complex)
    else:
        path = ar1_path(task.a if task.a is not None else 0.0, task.sigma2, n + 1, seed)
        u = path[::-1][1:].astype(complex)  # u(i-1), ..., u(i-n)
    report["past"] = [[float(v.real), float(v.imag)] for v in u]

    if np.linalg.norm(p) == 0:
        report.update(w_classical=_cl(w_classical), w_quantum=_cl(w_classical), route_fidelity=1.0,
                      u_hat_exact=[0.0, 0.0], u_hat_estimate=[0.0, 0.0], status="PASS")
        return report

    from .displacement import lcu_decompose_structured

    chi = lcu_decompose_structured(S).chi
    am = AccessModel(model, exact_prep=True) if exact_prep else AccessModel.for_target(model, chi, eps, seed=seed)
    be = encode(S, am)
    ver = verify_block_encoding(be, R)
    sol = solve_reference(be, p, M=R, eps=eps)
    w_quantum = sol.raw_solution
    u_hat_exact = complex(np.vdot(w_classical, u))
    wn = w_classical / np.linalg.norm(w_classical)
    un = u / np.linalg.norm(u)
    est = hadamard_test_inner(wn, un, task.shots, seed)
    u_hat_est = np.linalg.norm(w_classical) * np.linalg.norm(u) * est
    report.update(
        w_classical=_cl(w_classical),
        w_quantum=_cl(w_quantum),
        route_fidelity=sol.fidelity,
        kappa=sol.kappa,
        encoding={"alpha": be.alpha, "ancillas": be.a, "deviation": ver.deviation,
                  "epsilon_claimed": ver.epsilon_claimed, "queries": be.tally.queries, "gates": be.tally.gates},
        inner_exact=[float(np.vdot(wn, un).real), float(np.vdot(wn, un).imag)],
        inner_estimate=[est.real, est.imag],
        u_hat_exact=[u_hat_exact.real, u_hat_exact.imag],
        u_hat_estimate=[float(u_hat_est.real), float(u_hat_est.imag)],
        status="PASS" if ver.passed and sol.fidelity >= 1 - eps else "FAIL",
    )
    return report


def _cl(v) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=complex)]
