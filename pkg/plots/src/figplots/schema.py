"""CSV schemas for each figure and a checksum embedded in rendered images.

The renderers are read-only consumers: every plotted value must already be a
CSV column. A figure id maps to the columns its input files must carry; a
mismatch raises SchemaError naming the offending file and column.
"""

from __future__ import annotations

import csv
import hashlib
import pathlib

__all__ = ["SchemaError", "FIGURES", "load_table", "schema_checksum"]

POINTS = ["r", "corrected_mean", "corrected_stderr", "uncorrected_mean",
          "uncorrected_stderr"]
SCAN = ["d", "K", "r_subset", "delta", "eta", "delta0"]
BLOCH = ["state", "r", "zl_corr", "zl_corr_err", "zl_unc", "zl_unc_err",
         "xl_corr", "xl_corr_err", "xl_unc", "xl_unc_err"]
SCALING = ["p", "d", "N", "K", "delta_ratio", "eta", "delta0",
           "delta_tilde_1"]

# figure id -> (required columns per input position; last entry repeats)
FIGURES = {
    "fig2": [POINTS],
    "fig3c": [POINTS],
    "fig3d": [SCAN],
    "fig3e": [POINTS],
    "fig3f": [SCAN],
    "fig4b": [BLOCH],
    "fig4cd": [POINTS, SCAN],
    "s7perf": [SCALING],
}

_NUMERIC_EXCEPTIONS = {"state", "r_subset"}


class SchemaError(ValueError):
    pass


def load_table(path, required: list[str]) -> dict[str, list]:
    """Read a CSV into columns, validating the header against the schema."""
    path = pathlib.Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path.name}: empty file")
    header = rows[0]
    for col in required:
        if col not in header:
            raise SchemaError(f"{path.name}: missing column {col!r}")
    idx = {c: header.index(c) for c in header}
    table: dict[str, list] = {c: [] for c in header}
    for row in rows[1:]:
        if not row:
            continue
        for c, i in idx.items():
            v = row[i]
            table[c].append(v if c in _NUMERIC_EXCEPTIONS else float(v))
    return table


def schema_checksum(paths) -> str:
    """Stable digest of the input contents, embedded in the PNG metadata."""
    h = hashlib.sha256()
    for p in paths:
        h.update(pathlib.Path(p).read_bytes())
    return h.hexdigest()[:16]
