"""File formats: Matrix Market and CSV matrices, a plain tensor format,
JSON positive maps, and CSV convergence traces."""
from __future__ import annotations

import csv
import json
import os

import numpy as np

from .operators import PositiveMapRep


class FormatError(ValueError):
    """Malformed input file; carries the 1-based line number when known."""

    def __init__(self, path, message, line=None):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


def _fmt(v):
    return "%.17g" % v


def detect_format(path):
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".csv":
        return "csv"
    if ext in (".mtx", ".mm"):
        return "mtx"
    with open(path) as fh:
        head = fh.readline()
    return "mtx" if head.startswith("%%MatrixMarket") else "csv"


# --- Matrix Market ---------------------------------------------------------

_FIELDS = ("real", "integer", "complex", "pattern")
_SYMMETRIES = ("general", "symmetric", "hermitian")


def _tokens(path, lines, start):
    """Yield (line_no, token) for data lines after the header."""
    for no, line in enumerate(lines[start:], start=start + 1):
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        for tok in s.split():
            yield no, tok


def _number(path, tok, no):
    try:
        return float(tok)
    except ValueError:
        raise FormatError(path, f"not a number: {tok!r}", no) from None


def _check_sign(path, value, i, j, no, nonneg):
    if nonneg and np.real(value) < 0:
        raise FormatError(path, f"negative entry {value:g} at row {i + 1}, column {j + 1}", no)


def read_mtx(path, nonneg=True):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("%%MatrixMarket"):
        raise FormatError(path, "missing %%MatrixMarket header", 1)
    head = lines[0].split()
    if len(head) != 5 or head[1].lower() != "matrix":
        raise FormatError(path, f"bad header {lines[0]!r}", 1)
    layout, field, sym = (h.lower() for h in head[2:])
    if layout not in ("coordinate", "array"):
        raise FormatError(path, f"unknown layout {layout!r}", 1)
    if field not in _FIELDS:
        raise FormatError(path, f"unsupported field {field!r}", 1)
    if sym not in _SYMMETRIES or (sym == "hermitian" and field != "complex"):
        raise FormatError(path, f"unsupported symmetry {sym!r}", 1)
    if layout == "array" and field == "pattern":
        raise FormatError(path, "pattern field needs coordinate layout", 1)
    k = 1
    while k < len(lines) and (not lines[k].strip() or lines[k].lstrip().startswith("%")):
        k += 1
    if k == len(lines):
        raise FormatError(path, "missing size line", k)
    size_no = k + 1
    size = lines[k].split()
    want = 3 if layout == "coordinate" else 2
    if len(size) != want or not all(t.isdigit() for t in size):
        raise FormatError(path, f"bad size line {lines[k]!r}", size_no)
    m, n = int(size[0]), int(size[1])
    if sym != "general" and m != n:
        raise FormatError(path, f"{sym} matrix must be square", size_no)
    cplx = field == "complex"
    A = np.zeros((m, n), dtype=complex if cplx else float)
    toks = _tokens(path, lines, k + 1)

    def value():
        no, tok = next(toks)
        re = _number(path, tok, no)
        if field == "integer" and not float(re).is_integer():
            raise FormatError(path, f"non-integer value {tok!r}", no)
        if cplx:
            try:
                no2, tok2 = next(toks)
            except StopIteration:
                raise FormatError(path, "complex entry lacks an imaginary part", no) from None
            return no, complex(re, _number(path, tok2, no2))
        return no, re

    def put(i, j, v, no):
        _check_sign(path, v, i, j, no, nonneg)
        A[i, j] = v
        if i != j and sym == "symmetric":
            A[j, i] = v
        elif i != j and sym == "hermitian":
            A[j, i] = np.conj(v)

    try:
        if layout == "coordinate":
            nnz = int(size[2])
            for _ in range(nnz):
                no, ti = next(toks)
                _, tj = next(toks)
                if not (ti.isdigit() and tj.isdigit()):
                    raise FormatError(path, f"bad index pair {ti} {tj}", no)
                i, j = int(ti) - 1, int(tj) - 1
                if not (0 <= i < m and 0 <= j < n):
                    raise FormatError(path, f"index ({i + 1}, {j + 1}) outside {m}x{n}", no)
                if sym != "general" and i < j:
                    raise FormatError(path, "symmetric storage expects the lower triangle", no)
                if field == "pattern":
                    put(i, j, 1.0, no)
                else:
                    _, v = value()
                    put(i, j, v, no)
        else:
            # column-major; symmetric storage lists the lower triangle only
            for j in range(n):
                for i in range(j if sym != "general" else 0, m):
                    no, v = value()
                    put(i, j, v, no)
    except StopIteration:
        raise FormatError(path, "unexpected end of file", len(lines)) from None
    extra = next(toks, None)
    if extra is not None:
        raise FormatError(path, f"trailing data {extra[1]!r}", extra[0])
    return A


def write_mtx(path, A, comment=None):
    """Dense array layout, full precision."""
    A = np.asarray(A)
    cplx = np.iscomplexobj(A) and np.abs(A.imag).max(initial=0.0) > 0
    m, n = A.shape
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix array {'complex' if cplx else 'real'} general\n")
        if comment:
            fh.write(f"% {comment}\n")
        fh.write(f"{m} {n}\n")
        for j in range(n):
            for i in range(m):
                v = A[i, j]
                if cplx:
                    fh.write(f"{_fmt(v.real)} {_fmt(v.imag)}\n")
                else:
                    fh.write(f"{_fmt(np.real(v))}\n")


# --- CSV -------------------------------------------------------------------

def read_csv_matrix(path, nonneg=True):
    rows = []
    with open(path, newline="") as fh:
        for no, row in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in row]
            if not cells or all(c == "" for c in cells) or cells[0].startswith("#"):
                continue
            vals = []
            for j, tok in enumerate(cells):
                v = _number(path, tok, no)
                _check_sign(path, v, len(rows), j, no, nonneg)
                vals.append(v)
            if rows and len(vals) != len(rows[0][1]):
                raise FormatError(path, f"row has {len(vals)} entries, expected {len(rows[0][1])}", no)
            rows.append((no, vals))
    if not rows:
        raise FormatError(path, "no data rows")
    return np.array([v for _, v in rows], dtype=float)


def write_csv_matrix(path, A):
    A = np.real(np.asarray(A))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in A:
            w.writerow([_fmt(v) for v in row])


def load_matrix(path, nonneg=True):
    """Dense matrix from Matrix Market or CSV, chosen by extension or header.

    With ``nonneg`` a negative entry is rejected with its position.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    if detect_format(path) == "mtx":
        return read_mtx(path, nonneg)
    return read_csv_matrix(path, nonneg)


def save_matrix(path, A, fmt="mtx"):
    if fmt == "mtx":
        write_mtx(path, A)
    elif fmt == "csv":
        write_csv_matrix(path, A)
    else:
        raise ValueError(f"unknown format {fmt!r}")


# --- tensors ---------------------------------------------------------------

def load_tensor(path):
    """Header line "dims: d1 d2 ..." then row-major values."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    k = 0
    while k < len(lines) and (not lines[k].strip() or lines[k].lstrip().startswith("#")):
        k += 1
    if k == len(lines) or not lines[k].strip().lower().startswith("dims:"):
        raise FormatError(path, "expected a 'dims:' header", k + 1)
    try:
        dims = tuple(int(t) for t in lines[k].split(":", 1)[1].split())
    except ValueError:
        raise FormatError(path, f"bad dims line {lines[k]!r}", k + 1) from None
    if not dims or any(d <= 0 for d in dims):
        raise FormatError(path, "dims must be positive", k + 1)
    vals = []
    for no, line in enumerate(lines[k + 1:], start=k + 2):
        s = line.split("#", 1)[0].strip()
        for tok in s.replace(",", " ").split():
            vals.append(_number(path, tok, no))
    if len(vals) != int(np.prod(dims)):
        raise FormatError(path, f"found {len(vals)} values for dims {dims}")
    return np.array(vals).reshape(dims)


def save_tensor(path, T):
    T = np.asarray(T, dtype=float)
    with open(path, "w") as fh:
        fh.write("dims: " + " ".join(str(d) for d in T.shape) + "\n")
        for v in T.ravel():
            fh.write(_fmt(v) + "\n")


# --- positive maps ---------------------------------------------------------

def _complex_matrix(path, rows, what):
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise FormatError(path, f"{what}: expected a list of rows")
    out = np.zeros((len(rows), len(rows[0])), dtype=complex)
    for i, row in enumerate(rows):
        if len(row) != out.shape[1]:
            raise FormatError(path, f"{what}: row {i} has {len(row)} entries, expected {out.shape[1]}")
        for j, e in enumerate(row):
            if (not isinstance(e, list) or len(e) != 2
                    or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in e)):
                raise FormatError(path, f"{what}: entry ({i}, {j}) is not a [re, im] pair: {e!r}")
            out[i, j] = complex(e[0], e[1])
    return out


def _depth(x):
    d = 0
    while isinstance(x, list) and x:
        x = x[0]
        d += 1
    return d


def load_map(path):
    """Positive map from JSON with a "kraus" list or a "choi" matrix.

    Complex entries are [re, im] pairs. "kraus" may hold a single operator
    or a list of them.
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as err:
        raise FormatError(path, f"invalid JSON: {err.msg}", err.lineno) from None
    if not isinstance(doc, dict) or ("kraus" in doc) == ("choi" in doc):
        raise FormatError(path, 'expected exactly one of "kraus" or "choi"')
    if "kraus" in doc:
        ops = doc["kraus"]
        if _depth(ops) == 3:
            ops = [ops]
        mats = [_complex_matrix(path, K, f"kraus[{a}]") for a, K in enumerate(ops)]
        for a, K in enumerate(mats):
            if K.shape[0] != K.shape[1] or K.shape != mats[0].shape:
                raise FormatError(path, f"kraus[{a}] has shape {K.shape}; operators must be square and equal-sized")
        E = PositiveMapRep.from_kraus(mats)
    else:
        J = _complex_matrix(path, doc["choi"], "choi")
        n = int(round(np.sqrt(J.shape[0])))
        if J.shape != (n * n, n * n):
            raise FormatError(path, f"choi matrix must be n^2 x n^2, got {J.shape}")
        E = PositiveMapRep.from_choi(J)
    if not E.is_hermiticity_preserving(tol=1e-10):
        raise FormatError(path, "map does not preserve Hermiticity")
    return E


def _pairs(M):
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(M, dtype=complex)]


def save_map(path, E):
    with open(path, "w") as fh:
        json.dump({"choi": _pairs(E.to_choi())}, fh)


# --- traces and reports ----------------------------------------------------

TRACE_COLUMNS = ("iter", "row_resid", "col_resid", "entropy", "min_entry")


def write_trace(path, trace):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for rec in trace.records:
            w.writerow([rec.iter] + [repr(float(getattr(rec, c))) for c in TRACE_COLUMNS[1:]])


def write_ds_trace(path, history):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("iter", "ds_error"))
        for k, v in enumerate(history):
            w.writerow([k, repr(float(v))])


def read_trace(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in (rows[0].keys() if rows else [])}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, complex):
        return [x.real, x.imag] if x.imag else x.real
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if hasattr(x, "value") and isinstance(getattr(x, "value"), str):
        return x.value
    return x


def dump_report(report, fh):
    json.dump(_jsonable(report), fh, indent=2)
    fh.write("\n")
