import os

import numpy as np
import pandas as pd

from utils.errors import DataError

HEADER = "loss"


def read_losses(path):
    """
    Read a one-column loss file.
    path: CSV with one numeric value per line and an optional "loss" header
    Returns the finite values in file order; blank lines are skipped.
    """
    if not os.path.exists(path):
        raise DataError(f"Loss file not found: {path}")

    try:
        df = pd.read_csv(path, header=None, dtype=str, skip_blank_lines=False,
                         keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise DataError(f"Loss file is empty: {path}")
    except pd.errors.ParserError as exc:
        raise DataError(f"{path}: expected a single column ({exc})")

    if df.shape[1] != 1:
        raise DataError(f"{path}: expected a single column, got {df.shape[1]}")

    cells = df.iloc[:, 0].str.strip()
    lines = np.arange(1, len(cells) + 1)
    keep = (cells != "").to_numpy()
    if keep.any() and cells[keep].iloc[0].lower() == HEADER:
        keep[np.flatnonzero(keep)[0]] = False
    cells, lines = cells[keep], lines[keep]

    if cells.empty:
        raise DataError(f"Loss file has no values: {path}")

    values = pd.to_numeric(cells, errors="coerce").to_numpy(dtype=float)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        i = int(bad[0])
        raw = cells.iloc[i]
        reason = "is not a number" if np.isnan(values[i]) else "is not finite"
        raise DataError(f"{path}: line {lines[i]}: {raw!r} {reason}")

    return values.tolist()
