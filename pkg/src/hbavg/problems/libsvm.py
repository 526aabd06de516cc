"""LIBSVM text format: parsing, serialization, and inspection.

Each line is ``<label> <index>:<value> ...`` with 1-based, strictly
ascending indices.  Labels must be +1/-1 or 0/1 (0 is remapped to -1).
A line with no features is a valid all-zero row.  Errors carry the
offending 1-based line number.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse

from ..errors import ParseError


def parse_libsvm(path, n_features: int | None = None):
    """Parse a LIBSVM file into (csr_matrix, labels, (m, d)).

    d is the largest index seen unless ``n_features`` overrides it.
    """
    data: list[float] = []
    indices: list[int] = []
    indptr: list[int] = [0]
    labels: list[float] = []
    max_index = 0
    with open(path, "r", encoding="ascii") as fh:
        for line_no, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            labels.append(_map_label(tokens[0], line_no))
            prev = 0
            for tok in tokens[1:]:
                idx_s, sep, val_s = tok.partition(":")
                if not sep:
                    raise ParseError(line_no, f"malformed feature token {tok!r}")
                try:
                    idx = int(idx_s)
                except ValueError:
                    raise ParseError(line_no, f"malformed index in token {tok!r}") from None
                try:
                    val = float(val_s)
                except ValueError:
                    raise ParseError(line_no, f"malformed value in token {tok!r}") from None
                if idx < 1:
                    raise ParseError(line_no, f"index {idx} is not 1-based")
                if idx <= prev:
                    raise ParseError(
                        line_no, f"indices not ascending: {idx} after {prev}"
                    )
                prev = idx
                indices.append(idx - 1)
                data.append(val)
            max_index = max(max_index, prev)
            indptr.append(len(data))
    m = len(labels)
    d = int(n_features) if n_features is not None else max_index
    if max_index > d:
        raise ParseError(0, f"n_features={d} smaller than max index {max_index}")
    features = scipy.sparse.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(m, d),
    )
    return features, np.asarray(labels, dtype=np.float64), (m, d)


def _map_label(token: str, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(line_no, f"malformed label {token!r}") from None
    if value == 1.0:
        return 1.0
    if value == -1.0 or value == 0.0:
        return -1.0
    raise ParseError(line_no, f"label {token!r} not in {{-1, 0, +1}}")


def write_libsvm(path, features, labels) -> None:
    """Serialize a sparse matrix and labels back to LIBSVM text.

    Values are written with repr so parse(write(...)) reproduces the exact
    sparse structure and float values.
    """
    csr = scipy.sparse.csr_matrix(features)
    labels = np.asarray(labels)
    with open(path, "w", encoding="ascii") as fh:
        for i in range(csr.shape[0]):
            lo, hi = csr.indptr[i], csr.indptr[i + 1]
            parts = [f"{int(labels[i]):+d}"]
            parts.extend(
                f"{csr.indices[j] + 1}:{float(csr.data[j])!r}" for j in range(lo, hi)
            )
            fh.write(" ".join(parts) + "\n")


def inspect_libsvm(path) -> dict:
    """Summary statistics used by the `datasets inspect` CLI."""
    features, labels, (m, d) = parse_libsvm(path)
    return {
        "samples": m,
        "features": d,
        "nnz": int(features.nnz),
        "density": float(features.nnz) / max(m * d, 1),
        "positive": int(np.sum(labels > 0)),
        "negative": int(np.sum(labels < 0)),
    }
