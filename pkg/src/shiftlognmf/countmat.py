"""Sparse count matrices with dual compressed indexes and MatrixMarket I/O.

The alternating fitter consumes row slices when updating loadings and column
slices when updating factors, so both compressed orders are built once at
construction (memory 2 * nnz, O(1) slice access). Counts are stored as int64;
float64 copies of the values are kept alongside for the numerical kernels.
Matrices are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import numpy as np


class MatrixMarketError(ValueError):
    """Raised on malformed MatrixMarket input; message carries the line number."""


class CountMatrix:
    """Immutable sparse non-negative integer matrix.

    Build via :func:`from_triplets`, :func:`from_dense`, or
    :func:`read_matrix_market`; zeros are implicit, duplicates are summed.
    """

    __slots__ = (
        "n_rows",
        "n_cols",
        "row_ptr",
        "row_idx",
        "row_val",
        "row_val_f",
        "col_ptr",
        "col_idx",
        "col_val",
        "col_val_f",
    )

    def __init__(self, n_rows, n_cols, rows, cols, vals, _trusted=False):
        if not _trusted:
            raise TypeError("use from_triplets / from_dense / read_matrix_market")
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        # rows/cols/vals arrive deduplicated, zero-free, unsorted.
        order = np.lexsort((cols, rows))
        r = rows[order]
        c = cols[order]
        v = vals[order]
        self.row_ptr = np.zeros(self.n_rows + 1, dtype=np.int64)
        np.add.at(self.row_ptr, r + 1, 1)
        np.cumsum(self.row_ptr, out=self.row_ptr)
        self.row_idx = np.ascontiguousarray(c)
        self.row_val = np.ascontiguousarray(v)
        self.row_val_f = self.row_val.astype(np.float64)

        order_c = np.lexsort((r, c))
        self.col_ptr = np.zeros(self.n_cols + 1, dtype=np.int64)
        np.add.at(self.col_ptr, c[order_c] + 1, 1)
        np.cumsum(self.col_ptr, out=self.col_ptr)
        self.col_idx = np.ascontiguousarray(r[order_c])
        self.col_val = np.ascontiguousarray(v[order_c])
        self.col_val_f = self.col_val.astype(np.float64)

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self) -> int:
        return int(self.row_val.shape[0])

    def row(self, i):
        """(column indices, counts) of row i, sorted by column."""
        s, e = self.row_ptr[i], self.row_ptr[i + 1]
        return self.row_idx[s:e], self.row_val[s:e]

    def col(self, j):
        """(row indices, counts) of column j, sorted by row."""
        s, e = self.col_ptr[j], self.col_ptr[j + 1]
        return self.col_idx[s:e], self.col_val[s:e]

    def row_sums(self):
        out = np.zeros(self.n_rows, dtype=np.int64)
        np.add.at(out, np.repeat(np.arange(self.n_rows), np.diff(self.row_ptr)), self.row_val)
        return out

    def total(self) -> int:
        return int(self.row_val.sum())

    def nz_rows(self):
        """Row index of every stored entry, in row-major order."""
        return np.repeat(np.arange(self.n_rows), np.diff(self.row_ptr))

    def to_dense(self):
        out = np.zeros((self.n_rows, self.n_cols), dtype=np.int64)
        out[self.nz_rows(), self.row_idx] = self.row_val
        return out

    def __eq__(self, other):
        if not isinstance(other, CountMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.row_ptr, other.row_ptr)
            and np.array_equal(self.row_idx, other.row_idx)
            and np.array_equal(self.row_val, other.row_val)
        )

    def __repr__(self):
        return "CountMatrix(%d x %d, nnz=%d)" % (self.n_rows, self.n_cols, self.nnz)


def from_triplets(n: int, m: int, triplets) -> CountMatrix:
    """Build from (row, col, count) triplets; duplicates are summed, zeros dropped."""
    if n < 1 or m < 1:
        raise ValueError("matrix dimensions must be positive")
    trip = list(triplets)
    if trip:
        rows = np.array([t[0] for t in trip], dtype=np.int64)
        cols = np.array([t[1] for t in trip], dtype=np.int64)
        vals = np.array([t[2] for t in trip], dtype=np.int64)
    else:
        rows = cols = vals = np.empty(0, dtype=np.int64)
    bad = np.flatnonzero((rows < 0) | (rows >= n) | (cols < 0) | (cols >= m))
    if bad.size:
        i = int(bad[0])
        raise ValueError(
            "triplet (%d, %d, %d) out of range for a %d x %d matrix"
            % (rows[i], cols[i], vals[i], n, m)
        )
    neg = np.flatnonzero(vals < 0)
    if neg.size:
        i = int(neg[0])
        raise ValueError(
            "negative count in triplet (%d, %d, %d)" % (rows[i], cols[i], vals[i])
        )
    return _from_coo(n, m, rows, cols, vals)


def _from_coo(n, m, rows, cols, vals) -> CountMatrix:
    # Sum duplicates: sort by (row, col), then segment-sum.
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size:
        new_seg = np.empty(rows.size, dtype=bool)
        new_seg[0] = True
        new_seg[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        starts = np.flatnonzero(new_seg)
        summed = np.add.reduceat(vals, starts)
        rows, cols = rows[starts], cols[starts]
        keep = summed > 0
        rows, cols, vals = rows[keep], cols[keep], summed[keep]
    return CountMatrix(n, m, rows, cols, vals, _trusted=True)


def from_dense(arr) -> CountMatrix:
    """Build from a dense array of non-negative integers."""
    a = np.asarray(arr)
    if a.ndim != 2:
        raise ValueError("expected a 2-d array")
    if np.any(a < 0):
        raise ValueError("negative count in dense input")
    af = np.asarray(a, dtype=np.float64)
    if np.any(af != np.floor(af)):
        raise ValueError("non-integral count in dense input")
    r, c = np.nonzero(a)
    return _from_coo(
        a.shape[0], a.shape[1], r.astype(np.int64), c.astype(np.int64),
        np.asarray(a[r, c], dtype=np.int64),
    )


def sparsity(M: CountMatrix) -> float:
    """Fraction of zero entries, 1 - nnz/(n*m)."""
    return 1.0 - M.nnz / (M.n_rows * M.n_cols)


_HEADER_FIELDS = ("integer", "real")


def read_matrix_market(path) -> CountMatrix:
    """Read a 1-based MatrixMarket coordinate file ('integer' or 'real' field,
    'general' symmetry). Real values must be integral. Parse failures name the
    offending line."""
    with open(path, "rt", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError("line 1: empty file, expected MatrixMarket header")
    head = lines[0].split()
    if (
        len(head) != 5
        or head[0].lower() != "%%matrixmarket"
        or head[1].lower() != "matrix"
        or head[2].lower() != "coordinate"
    ):
        raise MatrixMarketError(
            "line 1: expected '%%MatrixMarket matrix coordinate <field> general', got %r"
            % lines[0]
        )
    field, symmetry = head[3].lower(), head[4].lower()
    if field not in _HEADER_FIELDS:
        raise MatrixMarketError("line 1: unsupported field %r (need integer or real)" % field)
    if symmetry != "general":
        raise MatrixMarketError("line 1: unsupported symmetry %r (only general)" % symmetry)

    body = [
        (no, ln) for no, ln in enumerate(lines[1:], start=2)
        if ln.strip() and not ln.lstrip().startswith("%")
    ]
    if not body:
        raise MatrixMarketError("line %d: missing size line" % (len(lines) + 1))
    size_no, size_ln = body[0]
    toks = size_ln.split()
    if len(toks) != 3:
        raise MatrixMarketError("line %d: size line needs 'rows cols nnz'" % size_no)
    try:
        n, m, nnz = (int(t) for t in toks)
    except ValueError:
        raise MatrixMarketError("line %d: non-integer size entry in %r" % (size_no, size_ln))
    if n < 1 or m < 1 or nnz < 0:
        raise MatrixMarketError("line %d: invalid sizes %r" % (size_no, size_ln))
    entries = body[1:]
    if len(entries) != nnz:
        raise MatrixMarketError(
            "line %d: header promises %d entries, file has %d" % (size_no, nnz, len(entries))
        )
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.int64)
    for t, (no, ln) in enumerate(entries):
        toks = ln.split()
        if len(toks) != 3:
            raise MatrixMarketError("line %d: entry needs 'row col value', got %r" % (no, ln))
        try:
            i = int(toks[0])
            j = int(toks[1])
        except ValueError:
            raise MatrixMarketError("line %d: non-integer index in %r" % (no, ln))
        try:
            v = float(toks[2])
        except ValueError:
            raise MatrixMarketError("line %d: unreadable value in %r" % (no, ln))
        if not v.is_integer():
            raise MatrixMarketError("line %d: non-integral value %s" % (no, toks[2]))
        if v < 0:
            raise MatrixMarketError("line %d: negative count %s" % (no, toks[2]))
        if not (1 <= i <= n) or not (1 <= j <= m):
            raise MatrixMarketError(
                "line %d: index (%d, %d) outside %d x %d" % (no, i, j, n, m)
            )
        rows[t], cols[t], vals[t] = i - 1, j - 1, int(v)
    return _from_coo(n, m, rows, cols, vals)


def write_matrix_market(M: CountMatrix, path) -> None:
    """Write in coordinate integer general format, 1-based, row-major order."""
    with open(path, "wt", encoding="ascii") as fh:
        fh.write("%%MatrixMarket matrix coordinate integer general\n")
        fh.write("%d %d %d\n" % (M.n_rows, M.n_cols, M.nnz))
        r = M.nz_rows()
        for i, j, v in zip(r, M.row_idx, M.row_val):
            fh.write("%d %d %d\n" % (i + 1, j + 1, v))
