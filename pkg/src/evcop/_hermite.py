"""Piecewise Hermite interpolation honoring values and derivatives at nodes."""

from __future__ import annotations

import numpy as np
from scipy.interpolate import BPoly


def hermite_interpolator(x, values, d1=None, d2=None) -> BPoly:
    """C2-targeting piecewise polynomial through ``(x, values)``.

    Matches first and second derivatives wherever they are finite; non-finite
    entries impose no constraint at that node (the adjoining pieces drop in
    degree accordingly).  With all constraints finite each piece is quintic.
    """
    x = np.asarray(x, dtype=float)
    values = np.asarray(values, dtype=float)
    n = x.size
    d1 = np.full(n, np.nan) if d1 is None else np.asarray(d1, dtype=float)
    d2 = np.full(n, np.nan) if d2 is None else np.asarray(d2, dtype=float)
    yi = []
    for i in range(n):
        row = [values[i]]
        if np.isfinite(d1[i]):
            row.append(d1[i])
            if np.isfinite(d2[i]):
                row.append(d2[i])
        yi.append(row)
    return BPoly.from_derivatives(x, yi)
