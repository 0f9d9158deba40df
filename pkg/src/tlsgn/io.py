"""Matrix file input/output: Matrix Market array format and headerless CSV."""
from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.io


def read_matrix(path):
    """Read a dense matrix from ``.mtx`` (Matrix Market) or ``.csv``.

    Vectors come back as 1-D arrays when the file holds a single column
    or a single row.
    """
    path = Path(path)
    ext = path.suffix.lower()
    if ext == ".mtx":
        data = scipy.io.mmread(path)
        if hasattr(data, "toarray"):
            data = data.toarray()
        data = np.asarray(data, dtype=float)
    elif ext in (".csv", ".txt"):
        data = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    else:
        raise ValueError(f"unsupported matrix file extension {ext!r} (use .mtx or .csv)")
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: non-finite entries")
    return data


def read_vector(path):
    data = read_matrix(path)
    if 1 not in data.shape:
        raise ValueError(f"{path}: expected a vector, got shape {data.shape}")
    return data.ravel()


def write_matrix(path, data):
    """Write a matrix (or vector, as one column) in the format given by the extension."""
    path = Path(path)
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if path.suffix.lower() == ".mtx":
        scipy.io.mmwrite(path, data, field="real", precision=17)
    else:
        np.savetxt(path, data, delimiter=",", fmt="%.17g")
