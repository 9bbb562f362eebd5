"""CSV schema contracts for each panel kind, mirroring the ddregister outputs."""
from __future__ import annotations

import csv


class SchemaError(ValueError):
    """Input file does not match the panel's column contract."""


# required columns per panel; a trailing '*' marks a prefix family where at
# least one matching column must exist (e.g. dot_q1, dot_q2, ...)
REQUIRED_COLUMNS = {
    "spectrum": ["t_us", "p_closed", "p_simulated"],
    "heatmap": ["t_us", "N", "epower"],
    "mqc": ["phi_rad", "p0_electron"],
    "decay": ["N_E", "z_e*", "f_exact"],
}


def read_table(path, panel: str):
    """Read and validate a CSV against the panel contract.

    Returns (header, columns-as-dict-of-float-lists). Raises SchemaError with
    the column diff on a mismatch or an empty table.
    """
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file (no header row)")
        rows = list(reader)
    if panel not in REQUIRED_COLUMNS:
        raise SchemaError(f"unknown panel kind {panel!r}")
    missing = []
    for want in REQUIRED_COLUMNS[panel]:
        if want.endswith("*"):
            prefix = want[:-1]
            if not any(h == prefix.rstrip("_") or h.startswith(prefix) for h in header):
                missing.append(want)
        elif want not in header:
            missing.append(want)
    if missing:
        raise SchemaError(
            f"{path}: column mismatch for panel {panel!r}: "
            f"missing {missing}, got {header}"
        )
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    columns: dict[str, list] = {h: [] for h in header}
    for row in rows:
        if len(row) != len(header):
            raise SchemaError(f"{path}: ragged row {row!r}")
        for h, v in zip(header, row):
            try:
                columns[h].append(float(v))
            except ValueError:
                columns[h].append(v)
    return header, columns
