"""Plain-text serialization of complex matrices.

One matrix per block, one row per line, entries written as ``a+bi``::

    # matrix-text v1
    # count 2
    # dims 2
    # shape 2 2
    1.0+0.0i 0.0+0.0i
    0.0+0.0i 0.0-0.0i
    # shape 2 2
    ...

Real and imaginary parts use ``repr``, which round-trips every finite
double exactly (signed zeros included); ``inf`` and ``nan`` are spelled
out.
"""

from __future__ import annotations

import io
import os
from typing import Sequence

import numpy as np

MAGIC = "# matrix-text v1"


def format_entry(z: complex) -> str:
    re, im = repr(float(z.real)), repr(float(z.imag))
    if not im.startswith("-"):
        im = "+" + im
    return f"{re}{im}i"


def parse_entry(tok: str) -> complex:
    if not tok.endswith("i"):
        raise ValueError(f"entry {tok!r} is not of the form a+bi")
    body = tok[:-1]
    # the imaginary sign is the last +/- that does not belong to an exponent
    for k in range(len(body) - 1, 0, -1):
        if body[k] in "+-" and body[k - 1] not in "eE":
            return complex(float(body[:k]), float(body[k:]))
    raise ValueError(f"entry {tok!r} is not of the form a+bi")


def dumps(matrices, dims: Sequence[int] | None = None) -> str:
    """Serialize one matrix or a sequence/stack of matrices."""
    arr = np.asarray(matrices, dtype=complex)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ValueError(f"expected a matrix or a stack of matrices, got shape {arr.shape}")
    out = [MAGIC, f"# count {arr.shape[0]}"]
    if dims is not None:
        out.append("# dims " + " ".join(str(int(d)) for d in dims))
    for m in arr:
        out.append(f"# shape {m.shape[0]} {m.shape[1]}")
        out.extend(" ".join(format_entry(z) for z in row) for row in m)
    return "\n".join(out) + "\n"


def loads(text: str) -> tuple[np.ndarray, tuple[int, ...] | None]:
    """Parse text into a ``(count, rows, cols)`` stack and the optional dims."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != MAGIC:
        raise ValueError(f"missing header {MAGIC!r}")
    count, dims, mats = None, None, []
    k = 1
    while k < len(lines):
        ln = lines[k]
        if ln.startswith("# count "):
            count = int(ln.split()[2])
        elif ln.startswith("# dims "):
            dims = tuple(int(x) for x in ln.split()[2:])
        elif ln.startswith("# shape "):
            r, c = (int(x) for x in ln.split()[2:4])
            rows = lines[k + 1 : k + 1 + r]
            if len(rows) != r:
                raise ValueError(f"matrix {len(mats)} declares {r} rows, found {len(rows)}")
            m = np.empty((r, c), dtype=complex)
            for i, row in enumerate(rows):
                toks = row.split()
                if len(toks) != c:
                    raise ValueError(f"matrix {len(mats)} row {i} has {len(toks)} entries, expected {c}")
                m[i] = [parse_entry(t) for t in toks]
            mats.append(m)
            k += r
        elif ln.startswith("#"):
            pass
        else:
            raise ValueError(f"unexpected line {k + 1}: {ln[:40]!r}")
        k += 1
    if count is not None and count != len(mats):
        raise ValueError(f"header announces {count} matrices, found {len(mats)}")
    if len({m.shape for m in mats}) > 1:
        raise ValueError("matrices in one file must share a shape")
    return np.array(mats), dims


def save(path: str | os.PathLike, matrices, dims=None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(matrices, dims))


def load(path: str | os.PathLike) -> tuple[np.ndarray, tuple[int, ...] | None]:
    with io.open(path, encoding="utf-8") as fh:
        return loads(fh.read())
