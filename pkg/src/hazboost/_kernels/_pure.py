"""Pure numpy reference implementations of the compiled kernels.

Kept operation-for-operation in step with ``_core.pyx`` so both backends
produce the same trees and measures on the same input.
"""

import numpy as np


def scan_axis_splits(codes, w, wy, n_codes):
    """Best right-closed split position on one ordinal axis.

    See the compiled twin for the gain definition.  Returns ``(k, gain)``
    or ``(-1, 0.0)`` when no strictly positive gain exists.
    """
    if n_codes < 2 or codes.shape[0] == 0:
        return -1, 0.0
    gw = np.bincount(codes, weights=w, minlength=n_codes)
    gwy = np.bincount(codes, weights=wy, minlength=n_codes)
    cw = np.cumsum(gw)
    cwy = np.cumsum(gwy)
    tw = cw[-1]
    twy = cwy[-1]
    if tw <= 0.0:
        return -1, 0.0
    lw = cw[:-1]
    lwy = cwy[:-1]
    rw = tw - lw
    rwy = twy - lwy
    valid = (lw > 0.0) & (rw > 0.0)
    if not valid.any():
        return -1, 0.0
    dm = np.zeros(n_codes - 1)
    np.divide(lwy, lw, out=dm, where=valid)
    dm_r = np.zeros(n_codes - 1)
    np.divide(rwy, rw, out=dm_r, where=valid)
    dm -= dm_r
    gain = np.where(valid, lw * rw / tw * dm * dm, 0.0)
    k = int(np.argmax(gain))
    if gain[k] <= 0.0:
        return -1, 0.0
    return k, float(gain[k])


def accumulate_overlap(t0, t1, rows, edges, out):
    """Add overlap lengths of intervals (t0, t1] with time slabs into
    ``out[row, slab]``."""
    if t0.shape[0] == 0:
        return
    lo = np.maximum(t0[:, None], edges[None, :-1])
    hi = np.minimum(t1[:, None], edges[None, 1:])
    ov = np.clip(hi - lo, 0.0, None)
    np.add.at(out, rows, ov)
