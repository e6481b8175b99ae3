"""Displacement operators and the LCU decompositions built on them.

Every word is a product of the unitaries ``Z_1``, ``Z_{-1}`` and the
reversal ``J``. A term ``(coeff, i, k, uses_J)`` stands for

* ``Z_1^i J Z_{-1}^{n-1-k}`` when ``uses_J`` is set and the reversal sits
  inside the word (Stein form),
* ``Z_1^i Z_{-1}^{n-1-k}`` when it is not (Sylvester form),
* ``Z_1^i Z_{-1}^{n-1-k} J`` when the decomposition is marked
  ``j_position="outer"`` (the Hankel forms, which are Toeplitz
  decompositions of ``M J``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .structmat import (
    StructureError,
    StructuredMatrix,
    build_structured,
    f_circulant_from_vector,
    is_power_of_two,
    reversal,
    unit_f_circulant,
)

DROP_TOL = 1e-14


class DisplacementKind(str, Enum):
    STEIN = "stein"
    SYLVESTER = "sylvester"


@dataclass(frozen=True)
class LcuTerm:
    coeff: complex
    i: int
    k: int
    uses_J: bool = False

    @property
    def key(self):
        return (self.i, self.k, self.uses_J)


@dataclass(frozen=True)
class LcuDecomposition:
    kind: DisplacementKind
    n: int
    prefactor: float
    terms: tuple
    j_position: str = "inner"
    source: str = "dense"

    def __post_init__(self):
        object.__setattr__(self, "kind", DisplacementKind(self.kind))
        if self.j_position not in ("inner", "outer"):
            raise StructureError(f"bad reversal position {self.j_position!r}")
        n = self.n
        for t in self.terms:
            if not (0 <= t.i < n and 0 <= t.k < n):
                raise StructureError(f"term index ({t.i}, {t.k}) out of range")
        terms = tuple(sorted(self.terms, key=lambda t: t.key))
        object.__setattr__(self, "terms", terms)

    @property
    def chi(self) -> float:
        return float(sum(abs(t.coeff) for t in self.terms))

    @property
    def alpha(self) -> float:
        return self.prefactor * self.chi

    def __len__(self):
        return len(self.terms)

    def coefficient_grid(self) -> np.ndarray:
        """Coefficients arranged as an ``n x n`` array indexed by ``(i, k)``."""
        grid = np.zeros((self.n, self.n), dtype=complex)
        for t in self.terms:
            grid[t.i, t.k] += t.coeff
        return grid


def _check_square(*mats):
    n = None
    for M in mats:
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise StructureError(f"expected a square matrix, got shape {M.shape}")
        if n is not None and M.shape[0] != n:
            raise StructureError("matrix sizes do not match")
        n = M.shape[0]
    return n


def displacement(M, A, B, kind) -> np.ndarray:
    M, A, B = (np.asarray(X, dtype=complex) for X in (M, A, B))
    _check_square(M, A, B)
    if DisplacementKind(kind) is DisplacementKind.STEIN:
        return M - A @ M @ B
    return A @ M - M @ B


def word_matrix(n: int, i: int, k: int, uses_J: bool, j_position: str = "inner") -> np.ndarray:
    Z1 = np.linalg.matrix_power(unit_f_circulant(n, 1), i)
    Zm = np.linalg.matrix_power(unit_f_circulant(n, -1), n - 1 - k)
    if not uses_J:
        return Z1 @ Zm
    J = reversal(n)
    if j_position == "outer":
        return Z1 @ Zm @ J
    return Z1 @ J @ Zm


def _terms_from_grid(grid: np.ndarray, uses_J: bool) -> tuple:
    rows, cols = np.nonzero(np.abs(grid) >= DROP_TOL)
    return tuple(LcuTerm(complex(grid[i, k]), int(i), int(k), uses_J) for i, k in zip(rows, cols))


def lcu_decompose(M, kind) -> LcuDecomposition:
    """Decompose any square ``M`` through its ``(Z_1, Z_{-1})`` displacement."""
    M = np.asarray(M, dtype=complex)
    n = _check_square(M)
    if not is_power_of_two(n) or n < 2:
        raise StructureError(f"dimension {n} is not a power of two >= 2")
    kind = DisplacementKind(kind)
    D = displacement(M, unit_f_circulant(n, 1), unit_f_circulant(n, -1), kind)
    terms = _terms_from_grid(D, kind is DisplacementKind.STEIN)
    return LcuDecomposition(kind, n, 0.5, terms)


def toeplitz_slot_coefficients(t_of, n: int) -> np.ndarray:
    """The 2n slot coefficients of a Toeplitz decomposition.

    Slot ``j < n`` multiplies ``Z_1^j`` and slot ``n + j`` multiplies
    ``Z_{-1}^j``; slot ``n`` is always zero.
    """
    x = np.zeros(2 * n, dtype=complex)
    x[0] = 2 * t_of(0)
    for j in range(1, n):
        a, b = t_of(j), t_of(-(n - j))
        x[j] = a + b
        x[n + j] = a - b
    return x


def slot_word(n: int, slot: int) -> tuple[int, int]:
    """``(i, k)`` of the word carried by a slot of the 2n layout."""
    if slot < n:
        return slot, n - 1
    return 0, n - 1 - (slot - n)


def word_slot(n: int, i: int, k: int) -> int | None:
    """Inverse of :func:`slot_word` for pure shift words, ``None`` otherwise."""
    if k == n - 1:
        return i
    if i == 0:
        return n + (n - 1 - k)
    return None


def _slots_to_terms(x: np.ndarray, n: int, uses_J: bool) -> tuple:
    out = []
    for slot, c in enumerate(x):
        if abs(c) >= DROP_TOL:
            i, k = slot_word(n, slot)
            out.append(LcuTerm(complex(c), i, k, uses_J))
    return tuple(out)


def hankel_as_toeplitz(S: StructuredMatrix):
    """Diagonal accessor ``t_m = h_{n-1+m}`` of the Toeplitz matrix ``H J``."""
    return lambda m: complex(S.seq[S.n - 1 + m])


def lcu_decompose_structured(S: StructuredMatrix) -> LcuDecomposition:
    n, fam = S.n, S.family
    if fam in ("toeplitz", "banded_toeplitz"):
        x = toeplitz_slot_coefficients(S.t, n)
        return LcuDecomposition("sylvester", n, 0.5, _slots_to_terms(x, n, False), source=fam)
    if fam == "circulant":
        terms = tuple(
            LcuTerm(complex(c), j, n - 1, False) for j, c in enumerate(S.seq) if abs(c) >= DROP_TOL
        )
        return LcuDecomposition("sylvester", n, 1.0, terms, source=fam)
    if fam == "hankel":
        x = toeplitz_slot_coefficients(hankel_as_toeplitz(S), n)
        return LcuDecomposition(
            "sylvester", n, 0.5, _slots_to_terms(x, n, True), j_position="outer", source=fam
        )
    if fam == "toeplitz_like":
        dec = lcu_decompose(S.dense, "sylvester")
        return LcuDecomposition("sylvester", n, 0.5, dec.terms, source=fam)
    if fam == "hankel_like":
        dec = lcu_decompose(S.dense @ reversal(n), "sylvester")
        terms = tuple(LcuTerm(t.coeff, t.i, t.k, True) for t in dec.terms)
        return LcuDecomposition("sylvester", n, 0.5, terms, j_position="outer", source=fam)
    raise StructureError(f"family {fam!r} has no structured decomposition")


def reconstruct(dec: LcuDecomposition) -> np.ndarray:
    n = dec.n
    out = np.zeros((n, n), dtype=complex)
    for t in dec.terms:
        out += t.coeff * word_matrix(n, t.i, t.k, t.uses_J, dec.j_position)
    return dec.prefactor * out


def chi_scaling(dec: LcuDecomposition) -> float:
    """The block-encoding scaling factor ``prefactor * sum |coeff|``."""
    return dec.alpha


def banded_chi_alternative(S: StructuredMatrix) -> float:
    """Plain 1-norm of the band, the smaller figure some texts quote for banded matrices.

    It can fall below the spectral norm, so it is reported but never used as
    a scaling factor.
    """
    j = np.arange(-(S.n - 1), S.n)
    r = S.bandwidth if S.bandwidth is not None else S.n - 1
    return float(np.abs(S.seq[np.abs(j) <= r]).sum())


# ---------------------------------------------------------------- identities

IDENTITIES = ("induction", "apotent", "switch", "fcirculant")


def _potency(A: np.ndarray) -> complex:
    n = A.shape[0]
    P = np.linalg.matrix_power(A, n)
    a = P[0, 0]
    if np.max(np.abs(P - a * np.eye(n))) > 1e-12:
        raise StructureError("operator matrix is not a-potent of order n")
    return complex(a)


def check_identity(which: str, M, A=None, B=None, k: int = 1, kind="stein") -> float:
    """Maximum entrywise deviation of one of the displacement identities.

    * ``induction``: ``M = A^k M B^k + sum_{i<k} A^i D B^i`` for the Stein
      displacement ``D``.
    * ``apotent``: with ``A^n = aI``, ``B^n = bI`` and ``ab != 1``,
      ``M = (1 - ab)^{-1} sum_{i<n} A^i D B^i``. With ``kind="sylvester"``
      the Sylvester displacement is converted first (``A`` must be invertible).
    * ``switch``: ``AM - MB = A (M - A^{-1} M B)`` and, when ``B`` is
      invertible, ``AM - MB = -(M - A M B^{-1}) B``.
    * ``fcirculant``: with ``A = Z_e``, ``B = Z_f``, ``M`` is rebuilt from a
      factorization of its displacement as a sum of products of
      f-circulant matrices.
    """
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    A = unit_f_circulant(n, 1) if A is None else np.asarray(A, dtype=complex)
    B = unit_f_circulant(n, -1) if B is None else np.asarray(B, dtype=complex)
    _check_square(M, A, B)
    kind = DisplacementKind(kind)

    if which == "induction":
        if k < 1:
            raise StructureError("induction needs k >= 1")
        D = displacement(M, A, B, "stein")
        acc = np.linalg.matrix_power(A, k) @ M @ np.linalg.matrix_power(B, k)
        Ai, Bi = np.eye(n), np.eye(n)
        for _ in range(k):
            acc = acc + Ai @ D @ Bi
            Ai, Bi = Ai @ A, Bi @ B
        return float(np.max(np.abs(M - acc)))

    if which == "apotent":
        a, b = _potency(A), _potency(B)
        if abs(1 - a * b) < 1e-12:
            raise StructureError("a-potent reconstruction needs ab != 1")
        if kind is DisplacementKind.STEIN:
            D = displacement(M, A, B, "stein")
        else:
            D = _inverse(A) @ displacement(M, A, B, "sylvester")
            A = _inverse(A)
            a = _potency(A)
            if abs(1 - a * b) < 1e-12:
                raise StructureError("a-potent reconstruction needs ab != 1")
        acc = np.zeros_like(M)
        Ai, Bi = np.eye(n), np.eye(n)
        for _ in range(n):
            acc = acc + Ai @ D @ Bi
            Ai, Bi = Ai @ A, Bi @ B
        return float(np.max(np.abs(M - acc / (1 - a * b))))

    if which == "switch":
        Ainv = _inverse(A)
        nabla = displacement(M, A, B, "sylvester")
        dev = np.max(np.abs(nabla - A @ displacement(M, Ainv, B, "stein")))
        if abs(np.linalg.det(B)) > 1e-12:
            Binv = np.linalg.inv(B)
            dev = max(dev, np.max(np.abs(nabla + displacement(M, A, Binv, "stein") @ B)))
        return float(dev)

    if which == "fcirculant":
        e, f = complex(A[0, n - 1]).real, complex(B[0, n - 1]).real
        if np.max(np.abs(A - unit_f_circulant(n, e))) or np.max(np.abs(B - unit_f_circulant(n, f))):
            raise StructureError("f-circulant expression needs A = Z_e and B = Z_f")
        return float(np.max(np.abs(M - fcirculant_expression(M, e, f, kind))))

    raise StructureError(f"unknown identity {which!r}")


def _inverse(A: np.ndarray) -> np.ndarray:
    if abs(np.linalg.det(A)) < 1e-12:
        raise StructureError("operator matrix is singular")
    return np.linalg.inv(A)


def fcirculant_expression(M, e: float, f: float, kind="sylvester", tol: float = 1e-12) -> np.ndarray:
    """Rebuild ``M`` from a low-rank factorization of its ``(Z_e, Z_f)`` displacement."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    kind = DisplacementKind(kind)
    Ze, Zf, J = unit_f_circulant(n, e), unit_f_circulant(n, f), reversal(n)
    if kind is DisplacementKind.SYLVESTER:
        if abs(e - f) < 1e-12:
            raise StructureError("Sylvester expression needs e != f")
        scale = 1 / (e - f)
    else:
        if abs(1 - e * f) < 1e-12:
            raise StructureError("Stein expression needs ef != 1")
        scale = 1 / (1 - e * f)
    D = displacement(M, Ze, Zf, kind)
    U, s, Vh = np.linalg.svd(D)
    r = int(np.sum(s > tol * max(s.max(initial=0.0), 1.0)))
    G = U[:, :r] * s[:r]
    H = Vh[:r].T  # D = G @ H.T
    out = np.zeros_like(M)
    for j in range(r):
        if kind is DisplacementKind.SYLVESTER:
            out += f_circulant_from_vector(G[:, j], e) @ f_circulant_from_vector(J @ H[:, j], f)
        else:
            out += f_circulant_from_vector(G[:, j], e) @ f_circulant_from_vector(J @ H[:, j], f).T @ J
    return scale * out


def build_and_decompose(S: StructuredMatrix):
    """Convenience pair ``(dense matrix, structured decomposition)``."""
    return build_structured(S), lcu_decompose_structured(S)
