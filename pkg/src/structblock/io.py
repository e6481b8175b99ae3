"""JSON readers and writers for matrices, decompositions, states and trees."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .displacement import LcuDecomposition, LcuTerm
from .simcore import QState
from .stateprep import QramTree, qram_build
from .structmat import StructureError, StructuredMatrix


def _pairs(values) -> list:
    return [[float(complex(v).real), float(complex(v).imag)] for v in values]


def _from_pairs(values) -> np.ndarray:
    out = []
    for v in values:
        if isinstance(v, (list, tuple)):
            if len(v) != 2:
                raise StructureError(f"complex entries are [re, im] pairs, got {v}")
            out.append(complex(v[0], v[1]))
        else:
            out.append(complex(v))
    return np.array(out, dtype=complex)


def structured_to_dict(S: StructuredMatrix) -> dict:
    seq = S.seq
    if S.family == "banded_toeplitz":
        r, n = S.bandwidth, S.n
        seq = seq[n - 1 - r : n + r]
    d = {"family": S.family, "n": S.n, "seq": _pairs(seq)}
    if S.edits:
        d["edits"] = [[i, k, v.real, v.imag] for i, k, v in S.edits]
    if S.bandwidth is not None:
        d["bandwidth"] = S.bandwidth
    return d


def structured_from_dict(d: dict) -> StructuredMatrix:
    try:
        edits = tuple((int(e[0]), int(e[1]), complex(e[2], e[3] if len(e) > 3 else 0.0)) for e in d.get("edits", []))
        return StructuredMatrix(d["family"], int(d["n"]), _from_pairs(d["seq"]), d.get("bandwidth"), edits)
    except KeyError as exc:
        raise StructureError(f"matrix file is missing field {exc}") from None


def dense_to_dict(M) -> dict:
    M = np.asarray(M, dtype=complex)
    return {"rows": M.shape[0], "cols": M.shape[1], "re": M.real.ravel().tolist(), "im": M.imag.ravel().tolist()}


def dense_from_dict(d: dict) -> np.ndarray:
    rows, cols = int(d["rows"]), int(d["cols"])
    re = np.asarray(d["re"], dtype=float)
    im = np.asarray(d.get("im", np.zeros(re.size)), dtype=float)
    if re.size != rows * cols or im.size != rows * cols:
        raise StructureError("dense matrix entry count does not match rows*cols")
    M = (re + 1j * im).reshape(rows, cols)
    if not np.all(np.isfinite(M)):
        raise StructureError("dense matrix has non-finite entries")
    return M


def load_matrix(d: dict):
    """Either a :class:`StructuredMatrix` or a dense array, depending on the fields present."""
    if "family" in d:
        return structured_from_dict(d)
    if "rows" in d:
        return dense_from_dict(d)
    raise StructureError("unrecognized matrix format")


def decomposition_to_dict(dec: LcuDecomposition) -> dict:
    return {
        "kind": dec.kind.value,
        "n": dec.n,
        "prefactor": dec.prefactor,
        "j_position": dec.j_position,
        "terms": [
            {"i": t.i, "k": t.k, "J": t.uses_J, "re": complex(t.coeff).real, "im": complex(t.coeff).imag}
            for t in dec.terms
        ],
        "chi": dec.chi,
    }


def decomposition_from_dict(d: dict) -> LcuDecomposition:
    terms = tuple(LcuTerm(complex(t["re"], t["im"]), int(t["i"]), int(t["k"]), bool(t["J"])) for t in d["terms"])
    return LcuDecomposition(d["kind"], int(d["n"]), float(d["prefactor"]), terms, d.get("j_position", "inner"))


def state_to_dict(s: QState) -> dict:
    return {"m": s.m, "amps": _pairs(s.amps)}


def state_from_dict(d: dict) -> QState:
    return QState(int(d["m"]), _from_pairs(d["amps"]))


def tree_to_dict(t: QramTree) -> dict:
    return t.as_dict()


def tree_from_dict(d: dict) -> QramTree:
    tree = qram_build(_from_pairs(d["leaves"]))
    if "nodes" in d and np.max(np.abs(np.asarray(d["nodes"]) - np.asarray(tree.nodes())), initial=0) > 1e-9:
        raise StructureError("stored tree nodes disagree with the leaves")
    return tree


def vector_from_json(d) -> np.ndarray:
    if isinstance(d, dict) and "amps" in d:
        return _from_pairs(d["amps"])
    return _from_pairs(d)


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def write_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2, default=_default)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def _default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")
