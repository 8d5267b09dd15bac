"""Dense matrix helpers: validation, factorizations and file I/O.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. The helpers
here validate shapes and finiteness, expose the QR and pseudo-inverse
conventions used by the rest of the package, and implement two on-disk
formats:

``csv``
    Comma separated, no header, one row per line, 17 significant digits.
``bin``
    The 4 magic bytes ``SEND``, rows and cols as little-endian uint32, then
    the row-major values as little-endian float64.
"""

import csv
import os
import struct
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from sklearn.utils import check_array

from .exceptions import MatrixFormatError

BIN_MAGIC = b"SEND"
_HEADER = struct.Struct("<4sII")

__all__ = [
    "QrPair",
    "as_matrix",
    "read_matrix",
    "write_matrix",
    "qr_decompose",
    "pseudo_inverse",
    "pos_neg_split",
]


def as_matrix(a, name="matrix"):
    """Validate ``a`` as a finite 2-D float64 array.

    Parameters
    ----------
    a : array-like
        Candidate matrix.
    name : str
        Used in error messages.

    Returns
    -------
    ndarray of shape (rows, cols)
    """
    return check_array(
        a,
        dtype=np.float64,
        ensure_all_finite=True,
        ensure_2d=True,
        ensure_min_samples=1,
        ensure_min_features=1,
        input_name=name,
    )


def _infer_format(path, fmt):
    if fmt is not None:
        if fmt not in ("csv", "bin"):
            raise ValueError(f"unknown matrix format {fmt!r}; expected 'csv' or 'bin'")
        return fmt
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".bin":
        return "bin"
    if ext in (".csv", ".txt"):
        return "csv"
    raise ValueError(f"cannot infer matrix format from {path!r}; pass format")


def _read_csv(path):
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if not record or (len(record) == 1 and not record[0].strip()):
                continue
            values = []
            for colno, token in enumerate(record, start=1):
                try:
                    value = float(token)
                except ValueError:
                    raise MatrixFormatError(
                        f"{path}: line {lineno}, column {colno}: non-numeric token {token!r}"
                    ) from None
                if not np.isfinite(value):
                    raise MatrixFormatError(
                        f"{path}: line {lineno}, column {colno}: non-finite value {token!r}"
                    )
                values.append(value)
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise MatrixFormatError(
                    f"{path}: line {lineno}: ragged row with {len(values)} fields, expected {width}"
                )
            rows.append(values)
    if not rows:
        raise MatrixFormatError(f"{path}: empty matrix file")
    return np.array(rows, dtype=np.float64)


def _read_bin(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise MatrixFormatError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, rows, cols = _HEADER.unpack_from(blob)
    if magic != BIN_MAGIC:
        raise MatrixFormatError(f"{path}: bad magic {magic!r}, expected {BIN_MAGIC!r}")
    if rows == 0 or cols == 0:
        raise MatrixFormatError(f"{path}: bad dims {rows}x{cols}")
    expected = _HEADER.size + 8 * rows * cols
    if len(blob) != expected:
        raise MatrixFormatError(
            f"{path}: payload holds {len(blob) - _HEADER.size} bytes, "
            f"dims {rows}x{cols} need {8 * rows * cols}"
        )
    data = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).reshape(rows, cols)
    bad = np.argwhere(~np.isfinite(data))
    if bad.size:
        i, j = bad[0]
        raise MatrixFormatError(f"{path}: non-finite value at row {i}, column {j}")
    return data.astype(np.float64)


def read_matrix(path, format=None):
    """Load a matrix from ``path``.

    Parameters
    ----------
    path : str or path-like
    format : {'csv', 'bin'}, optional
        Inferred from the file extension when omitted.

    Returns
    -------
    ndarray of shape (rows, cols)

    Raises
    ------
    MatrixFormatError
        For ragged rows, non-numeric or non-finite tokens, bad magic or
        inconsistent dimensions.
    """
    fmt = _infer_format(path, format)
    return _read_bin(path) if fmt == "bin" else _read_csv(path)


def write_matrix(m, path, format=None):
    """Write ``m`` to ``path`` in the csv or bin format.

    The bin format round-trips bit-exactly. The csv format uses 17
    significant digits, which is enough to round-trip any float64.
    """
    m = as_matrix(m)
    fmt = _infer_format(path, format)
    if fmt == "bin":
        rows, cols = m.shape
        payload = _HEADER.pack(BIN_MAGIC, rows, cols) + np.ascontiguousarray(m, dtype="<f8").tobytes()
        with open(path, "wb") as fh:
            fh.write(payload)
        return
    with open(path, "w", newline="") as fh:
        for row in m:
            fh.write(",".join(format_value(v) for v in row))
            fh.write("\n")


def format_value(v):
    """Render a float with 17 significant digits (shortest exact form)."""
    return format(float(v), ".17g")


@dataclass(frozen=True)
class QrPair:
    """Result of :func:`qr_decompose`.

    Attributes
    ----------
    q : ndarray of shape (rows, k)
        Orthonormal columns, ``k = min(rows, cols)``.
    r : ndarray of shape (k, cols)
        Upper triangular with exact zeros below the diagonal.
    perm : ndarray of int
        Column permutation, so that ``q @ r == a[:, perm]``. The identity
        permutation when pivoting is disabled.
    """

    q: np.ndarray
    r: np.ndarray
    perm: np.ndarray


def qr_decompose(a, pivot=True):
    """Householder QR factorization, column-pivoted by default.

    With pivoting the magnitudes of ``diag(r)`` are non-increasing, which is
    what the rank estimator relies on.

    Parameters
    ----------
    a : array-like of shape (rows, cols)
    pivot : bool, default=True

    Returns
    -------
    QrPair
    """
    a = as_matrix(a)
    if pivot:
        q, r, perm = scipy.linalg.qr(a, mode="economic", pivoting=True)
    else:
        q, r = scipy.linalg.qr(a, mode="economic")
        perm = np.arange(a.shape[1])
    r = np.triu(r)
    return QrPair(q=q, r=r, perm=np.asarray(perm))


def pseudo_inverse(a):
    """Moore-Penrose pseudo-inverse through the SVD.

    Singular values below ``sigma_max * max(rows, cols) * eps`` are treated
    as zero.
    """
    a = as_matrix(a)
    return np.linalg.pinv(a, rtol=max(a.shape) * np.finfo(np.float64).eps)


def pos_neg_split(a):
    """Split ``a`` into nonnegative parts with ``a == pos - neg``.

    Returns
    -------
    pos, neg : ndarray
        ``(|a| + a) / 2`` and ``(|a| - a) / 2``.
    """
    a = np.asarray(a, dtype=np.float64)
    absolute = np.abs(a)
    return (absolute + a) / 2.0, (absolute - a) / 2.0
