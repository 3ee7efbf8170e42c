"""Dense matrix/vector helpers and Matrix Market text I/O.

Matrices are plain float64 numpy arrays (2-D, row-major); vectors are 1-D
arrays.  Everything here validates finiteness on entry and treats arrays as
immutable afterwards.
"""

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySelection,
    IndexOutOfRange,
    ParseError,
    UnsupportedField,
    ZeroRow,
)

# Relative threshold below which a row counts as zero for normalization.
ZERO_ROW_RTOL = 1e-14


def as_matrix(a):
    """Coerce to a 2-D float64 array, checking shape and finiteness."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionMismatch(f"expected a nonempty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DimensionMismatch("matrix contains non-finite entries")
    return a


def as_vector(v):
    """Coerce to a 1-D float64 array, checking finiteness."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D array, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DimensionMismatch("vector contains non-finite entries")
    return v


def normalize_rows(A):
    """Scale every row of A to unit Euclidean norm.

    Returns (normalized matrix, scales) where `scales` holds the original row
    norms.  Right-hand sides built against A must be divided by `scales` by
    the caller.  Raises ZeroRow if any row norm falls below
    ZERO_ROW_RTOL * max row norm.
    """
    A = as_matrix(A)
    scales = np.linalg.norm(A, axis=1)
    threshold = ZERO_ROW_RTOL * scales.max()
    small = np.flatnonzero(scales <= threshold)
    if small.size:
        raise ZeroRow(int(small[0]))
    return A / scales[:, None], scales


def residuals(A, x, b):
    """Signed residuals <a_i, x> - b_i for every row."""
    A = as_matrix(A)
    x = as_vector(x)
    b = as_vector(b)
    if A.shape[1] != x.shape[0] or A.shape[0] != b.shape[0]:
        raise DimensionMismatch(
            f"A is {A.shape}, x has length {x.shape[0]}, b has length {b.shape[0]}"
        )
    return A @ x - b


def matvec(A, x):
    """Matrix-vector product A @ x."""
    A = as_matrix(A)
    x = as_vector(x)
    if A.shape[1] != x.shape[0]:
        raise DimensionMismatch(f"A is {A.shape}, x has length {x.shape[0]}")
    return A @ x


def frobenius_norm(A):
    return float(np.linalg.norm(as_matrix(A)))


def one_two_norm(A):
    """sqrt(sum_i ||a_i||_1^2), the row-wise (1,2) mixed norm."""
    A = as_matrix(A)
    row_l1 = np.abs(A).sum(axis=1)
    return float(np.sqrt(np.sum(row_l1**2)))


def submatrix(A, row_idx, col_idx):
    """Rows of A indexed by row_idx crossed with columns indexed by col_idx."""
    A = as_matrix(A)
    rows = np.asarray(sorted(row_idx), dtype=int)
    cols = np.asarray(sorted(col_idx), dtype=int)
    if rows.size == 0 or cols.size == 0:
        raise EmptySelection("row and column index sets must be non-empty")
    m, n = A.shape
    if rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= n:
        raise IndexOutOfRange(f"indices out of range for shape {A.shape}")
    return A[np.ix_(rows, cols)]


# ---------------------------------------------------------------------------
# Matrix Market text exchange.
#
# A minimal reader/writer for the real-valued subset of the format:
# coordinate and array layouts, general and symmetric symmetry.  Hand-rolled
# (rather than delegating to scipy.io) so parse failures can report exact
# line numbers and so output precision is under our control.
# ---------------------------------------------------------------------------

_FMT = "%.17g"


def mm_write(path, obj):
    """Write a matrix (2-D) or vector (1-D) in Matrix Market array format.

    Vectors are stored as m-by-1 arrays; mm_read restores them to 1-D.
    """
    obj = np.asarray(obj, dtype=float)
    if obj.ndim == 1:
        body = obj[:, None]
    elif obj.ndim == 2:
        body = obj
    else:
        raise DimensionMismatch(f"cannot write array of ndim {obj.ndim}")
    m, n = body.shape
    lines = ["%%MatrixMarket matrix array real general", f"{m} {n}"]
    # Array format lists entries column by column.
    for j in range(n):
        for i in range(m):
            lines.append(_FMT % body[i, j])
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def mm_read(path):
    """Read a Matrix Market file; m-by-1 arrays come back as 1-D vectors."""
    with open(path) as fh:
        raw = fh.readlines()
    if not raw:
        raise ParseError(1, "empty file")

    header = raw[0].split()
    if (
        len(header) != 5
        or header[0] != "%%MatrixMarket"
        or header[1].lower() != "matrix"
    ):
        raise ParseError(1, "bad header")
    layout, field, symmetry = (h.lower() for h in header[2:5])
    if layout not in ("coordinate", "array"):
        raise ParseError(1, f"unknown layout {layout!r}")
    if field not in ("real", "integer"):
        raise UnsupportedField(f"field {field!r} is not supported")
    if symmetry not in ("general", "symmetric"):
        raise UnsupportedField(f"symmetry {symmetry!r} is not supported")

    # Skip comments/blank lines, remembering original line numbers.
    data = [
        (i + 1, ln.strip())
        for i, ln in enumerate(raw[1:], start=1)
        if ln.strip() and not ln.lstrip().startswith("%")
    ]
    if not data:
        raise ParseError(len(raw), "missing size line")

    size_lineno, size_line = data[0]
    sizes = size_line.split()
    entries = data[1:]

    if layout == "array":
        if len(sizes) != 2:
            raise ParseError(size_lineno, "array size line must be 'm n'")
        try:
            m, n = int(sizes[0]), int(sizes[1])
        except ValueError:
            raise ParseError(size_lineno, "non-integer dimensions") from None
        expected = m * n if symmetry == "general" else m * (m + 1) // 2
        if len(entries) != expected:
            raise ParseError(
                size_lineno, f"expected {expected} entries, found {len(entries)}"
            )
        out = np.zeros((m, n))
        it = iter(entries)
        if symmetry == "general":
            for j in range(n):
                for i in range(m):
                    lineno, txt = next(it)
                    out[i, j] = _parse_value(txt, lineno)
        else:
            if m != n:
                raise ParseError(size_lineno, "symmetric matrix must be square")
            for j in range(n):
                for i in range(j, m):
                    lineno, txt = next(it)
                    out[i, j] = _parse_value(txt, lineno)
                    out[j, i] = out[i, j]
    else:
        if len(sizes) != 3:
            raise ParseError(size_lineno, "coordinate size line must be 'm n nnz'")
        try:
            m, n, nnz = (int(s) for s in sizes)
        except ValueError:
            raise ParseError(size_lineno, "non-integer dimensions") from None
        if len(entries) != nnz:
            raise ParseError(
                size_lineno, f"expected {nnz} entries, found {len(entries)}"
            )
        out = np.zeros((m, n))
        for lineno, txt in entries:
            parts = txt.split()
            if len(parts) != 3:
                raise ParseError(lineno, "coordinate entry must be 'i j value'")
            try:
                i, j = int(parts[0]) - 1, int(parts[1]) - 1
            except ValueError:
                raise ParseError(lineno, "non-integer coordinates") from None
            if not (0 <= i < m and 0 <= j < n):
                raise ParseError(lineno, "coordinates out of range")
            val = _parse_value(parts[2], lineno)
            out[i, j] = val
            if symmetry == "symmetric" and i != j:
                out[j, i] = val

    if out.ndim == 2 and out.shape[1] == 1:
        return out[:, 0]
    return out


def _parse_value(txt, lineno):
    try:
        return float(txt)
    except ValueError:
        raise ParseError(lineno, f"bad numeric value {txt!r}") from None
