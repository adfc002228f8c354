"""CSV reading and writing for panels and coefficient paths.

Floats are written with 17 significant digits so that a round trip is lossless
and repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import io
from typing import Iterable, TextIO

import numpy as np

from .core import CoefPath, Panel, validate_panel
from .errors import InvalidInput, RaggedJ


def fmt(v) -> str:
    """17-significant-digit float formatting."""
    return format(float(v), ".17g")


def read_panel_csv(stream: TextIO) -> Panel:
    """Parse ``t,i,y,x_1..x_J`` rows (any order); ``#`` lines are comments."""
    lines = [ln for ln in stream if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise InvalidInput("panel CSV is empty")
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    J = len(header) - 3
    expected = ["t", "i", "y"] + [f"x_{j}" for j in range(1, J + 1)]
    if J < 1 or header != expected:
        raise InvalidInput(f"panel header must be t,i,y,x_1,...,x_J; got {','.join(header)}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if len(rec) != len(header):
            raise RaggedJ(f"line {lineno}: expected {len(header)} fields, got {len(rec)}")
        try:
            rows.append([float(v) for v in rec])
        except ValueError:
            raise InvalidInput(f"line {lineno}: non-numeric field") from None
    return validate_panel(rows)


def write_panel_csv(panel: Panel, stream: TextIO, comments: Iterable[str] = ()) -> None:
    for c in comments:
        stream.write(f"# {c}\n")
    stream.write(",".join(["t", "i", "y"] + [f"x_{j}" for j in range(1, panel.J + 1)]) + "\n")
    for t, i, *vals in panel.rows():
        stream.write(",".join([fmt(t), str(i)] + [fmt(v) for v in vals]) + "\n")


def panel_to_string(panel: Panel, comments: Iterable[str] = ()) -> str:
    buf = io.StringIO()
    write_panel_csv(panel, buf, comments)
    return buf.getvalue()


def write_path_csv(path: CoefPath, stream: TextIO, diagnostics: bool = True) -> None:
    """``t,beta_1..beta_J[,max_foc_residual,converged]`` per grid point."""
    cols = ["t"] + [f"beta_{j}" for j in range(1, path.J + 1)]
    if diagnostics:
        cols += ["max_foc_residual", "converged"]
    stream.write(",".join(cols) + "\n")
    for ti, t in enumerate(path.grid.points):
        row = [fmt(t)] + [fmt(b) for b in path.betas[ti]]
        if diagnostics:
            row += [fmt(path.foc_residual_norm[ti]), str(int(path.converged[ti]))]
        stream.write(",".join(row) + "\n")


def read_path_csv(stream: TextIO) -> tuple[np.ndarray, np.ndarray]:
    """Read ``(t, betas)`` back from a coefficient CSV (diagnostic columns ignored)."""
    lines = [ln for ln in stream if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    nb = sum(1 for h in header if h.startswith("beta_"))
    data = np.array([[float(v) for v in rec[:1 + nb]] for rec in reader])
    return data[:, 0], data[:, 1:]
