"""Dense and structured complex matrices and the unit f-circulant shift.

Structured families are stored by their defining sequences. The "-like"
families carry an explicit edit list on top of the base Toeplitz/Hankel
pattern, which is what lets the displacement sparsity ``d`` be computed
without ever looking at the dense matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

FAMILIES = (
    "toeplitz",
    "circulant",
    "hankel",
    "toeplitz_like",
    "hankel_like",
    "banded_toeplitz",
)


class StructureError(ValueError):
    """Raised when a structured-matrix description is malformed."""


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def log2_int(n: int) -> int:
    if not is_power_of_two(n):
        raise StructureError(f"dimension {n} is not a power of two")
    return n.bit_length() - 1


def _as_complex_vector(values) -> np.ndarray:
    arr = np.asarray(values, dtype=complex).reshape(-1)
    if arr.size == 0:
        raise StructureError("empty sequence")
    if not np.all(np.isfinite(arr)):
        raise StructureError("sequence has non-finite entries")
    return arr


@dataclass(frozen=True)
class StructuredMatrix:
    """Defining data for one structured matrix.

    ``seq`` layout per family:

    * toeplitz, toeplitz_like: ``t_{-(n-1)} .. t_{n-1}`` (length 2n-1)
    * banded_toeplitz: ``t_{-r} .. t_{r}`` (length 2r+1) or the full 2n-1 form
    * circulant: ``c_0 .. c_{n-1}``
    * hankel, hankel_like: ``h_0 .. h_{2n-2}``

    ``edits`` is a tuple of ``(row, col, value)`` overrides applied last.
    """

    family: str
    n: int
    seq: np.ndarray
    bandwidth: int | None = None
    edits: tuple = field(default=())

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise StructureError(f"unknown family {self.family!r}")
        n = int(self.n)
        if n < 2 or not is_power_of_two(n):
            raise StructureError(f"n must be a power of two >= 2, got {self.n}")
        seq = _as_complex_vector(self.seq)
        seq.setflags(write=False)
        object.__setattr__(self, "seq", seq)
        object.__setattr__(self, "n", n)

        expected = {
            "toeplitz": 2 * n - 1,
            "toeplitz_like": 2 * n - 1,
            "circulant": n,
            "hankel": 2 * n - 1,
            "hankel_like": 2 * n - 1,
        }
        if self.family == "banded_toeplitz":
            r = self.bandwidth
            if r is None or r < 0 or r > n - 1:
                raise StructureError(f"banded family needs 0 <= bandwidth <= n-1, got {r}")
            if seq.size == 2 * r + 1:
                full = np.zeros(2 * n - 1, dtype=complex)
                full[n - 1 - r : n + r] = seq
                full.setflags(write=False)
                object.__setattr__(self, "seq", full)
            elif seq.size == 2 * n - 1:
                j = np.arange(-(n - 1), n)
                if np.any(seq[np.abs(j) > r] != 0):
                    raise StructureError("banded sequence has entries outside the band")
            else:
                raise StructureError(
                    f"banded sequence must have length {2 * r + 1} or {2 * n - 1}, got {seq.size}"
                )
        elif seq.size != expected[self.family]:
            raise StructureError(
                f"{self.family} with n={n} needs {expected[self.family]} entries, got {seq.size}"
            )

        if self.edits and not self.family.endswith("_like"):
            raise StructureError("edits are only allowed for -like families")
        clean = []
        for edit in self.edits:
            i, k, v = edit
            i, k = int(i), int(k)
            if not (0 <= i < n and 0 <= k < n):
                raise StructureError(f"edit index ({i}, {k}) out of range for n={n}")
            v = complex(v)
            if not np.isfinite(v):
                raise StructureError("edit value is not finite")
            clean.append((i, k, v))
        object.__setattr__(self, "edits", tuple(clean))

    def t(self, j: int) -> complex:
        """Toeplitz diagonal ``t_j`` (Toeplitz-type families only)."""
        return complex(self.seq[j + self.n - 1])

    @cached_property
    def dense(self) -> np.ndarray:
        out = build_structured(self)
        out.setflags(write=False)
        return out

    @cached_property
    def d(self) -> int:
        """Row-sparsity parameter of the displacement for -like families.

        The sub-matrix of the Sylvester displacement left after deleting its
        first row and last column is ``(d-1)``-row-sparse. Computed from the
        edit list: an edit at ``(r, c)`` can only touch displacement entries
        ``(r+1, c)`` and ``(r, c-1)``.
        """
        if not self.family.endswith("_like"):
            return 1
        return 1 + max((len(cols) for cols in edit_columns(self).values()), default=0)


def toeplitz_edits(S: StructuredMatrix) -> tuple:
    """Edits expressed on the Toeplitz-like matrix the family is built from.

    Hankel-like matrices are handled through ``H J`` (a Toeplitz-like
    matrix), so their edit columns are mirrored.
    """
    if S.family == "hankel_like":
        return tuple((i, S.n - 1 - k, v) for i, k, v in S.edits)
    return S.edits


def edit_columns(S: StructuredMatrix) -> dict[int, set[int]]:
    """Candidate nonzero columns, per row ``i >= 1``, of the displacement sub-matrix."""
    n = S.n
    rows: dict[int, set[int]] = {}
    for r, c, _ in toeplitz_edits(S):
        if r + 1 <= n - 1 and c <= n - 2:
            rows.setdefault(r + 1, set()).add(c)
        if r >= 1 and c >= 1:
            rows.setdefault(r, set()).add(c - 1)
    return rows


def build_structured(S: StructuredMatrix) -> np.ndarray:
    n = S.n
    i = np.arange(n)[:, None]
    k = np.arange(n)[None, :]
    fam = S.family
    if fam in ("toeplitz", "toeplitz_like", "banded_toeplitz"):
        out = S.seq[(i - k) + n - 1].copy()
    elif fam == "circulant":
        out = S.seq[(i - k) % n].copy()
    else:
        out = S.seq[i + k].copy()
    for r, c, v in S.edits:
        out[r, c] = v
    return np.asarray(out, dtype=complex)


def unit_f_circulant(n: int, f: float) -> np.ndarray:
    if n < 2:
        raise StructureError("unit f-circulant needs n >= 2")
    Z = np.zeros((n, n), dtype=complex)
    Z[1:, :-1] = np.eye(n - 1)
    Z[0, -1] = f
    return Z


def f_circulant_from_vector(v, f: float) -> np.ndarray:
    """Matrix whose columns are ``v, Z_f v, ..., Z_f^{n-1} v``."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    n = v.size
    if n < 2:
        raise StructureError("f-circulant needs a vector of length >= 2")
    Z = unit_f_circulant(n, f)
    cols = [v]
    for _ in range(n - 1):
        cols.append(Z @ cols[-1])
    return np.column_stack(cols)


def reversal(n: int) -> np.ndarray:
    return np.eye(n, dtype=complex)[::-1].copy()


def hermitian_extend(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise StructureError(f"hermitian_extend needs a square matrix, got shape {M.shape}")
    n = M.shape[0]
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    out[:n, n:] = M
    out[n:, :n] = M.conj().T
    return out


def toeplitz_from_sequence(t, n: int | None = None) -> StructuredMatrix:
    """Shorthand for a Toeplitz matrix from ``t_{-(n-1)}..t_{n-1}``."""
    t = np.asarray(t, dtype=complex)
    if n is None:
        n = (t.size + 1) // 2
    return StructuredMatrix("toeplitz", n, t)


def hermitian_toeplitz(first_row) -> StructuredMatrix:
    """Hermitian Toeplitz matrix with first row ``r(0), r(1), ..., r(n-1)``."""
    r = np.asarray(first_row, dtype=complex)
    n = r.size
    # t_{-k} = r(k) on the first row, t_k = conj(r(k)) on the first column
    seq = np.concatenate([r[:0:-1], [r[0].real], r[1:].conj()])
    return StructuredMatrix("toeplitz", n, seq)
