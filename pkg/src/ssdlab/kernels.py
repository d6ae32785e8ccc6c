"""Hot inner-loop kernels with two interchangeable backends.

The numba backend JIT-compiles the loop implementations; the numpy backend
uses vectorized equivalents. Both produce bit-identical integer outputs, so
simulations are reproducible across backends. Select with the environment
variable ``SSDLAB_KERNELS=numba|numpy`` (default: numba when importable).
"""

from __future__ import annotations

import os

import numpy as np

# Orientation codes: 0=N, 1=E, 2=S, 3=W. Row 0 is the top of the map, so
# "north" decreases the row index. FORWARD[o] and RIGHT[o] are (drow, dcol).
FORWARD = np.array([(-1, 0), (0, 1), (1, 0), (0, -1)], dtype=np.int64)
RIGHT = np.array([(0, 1), (1, 0), (0, -1), (-1, 0)], dtype=np.int64)


def _l1_neighbor_counts_loop(mask, radius):
    """Count set cells within L1 distance <= radius of each cell (self excluded)."""
    h, w = mask.shape
    out = np.zeros((h, w), dtype=np.int64)
    for r in range(h):
        for c in range(w):
            total = 0
            for dr in range(-radius, radius + 1):
                rr = r + dr
                if rr < 0 or rr >= h:
                    continue
                rem = radius - abs(dr)
                for dc in range(-rem, rem + 1):
                    cc = c + dc
                    if cc < 0 or cc >= w:
                        continue
                    if dr == 0 and dc == 0:
                        continue
                    if mask[rr, cc]:
                        total += 1
            out[r, c] = total
    return out


def _l1_neighbor_counts_numpy(mask, radius):
    h, w = mask.shape
    padded = np.zeros((h + 2 * radius, w + 2 * radius), dtype=np.int64)
    padded[radius:radius + h, radius:radius + w] = mask
    out = np.zeros((h, w), dtype=np.int64)
    for dr in range(-radius, radius + 1):
        rem = radius - abs(dr)
        for dc in range(-rem, rem + 1):
            if dr == 0 and dc == 0:
                continue
            out += padded[radius + dr:radius + dr + h, radius + dc:radius + dc + w]
    return out


def _extract_window_loop(codes, row, col, orientation, win_h, win_w,
                         center_r, center_c, oob_code):
    """Egocentric window of cell codes, rotated so the agent faces up.

    Window cell (wr, wc) maps to the world cell at
    ``center_r - wr`` steps forward and ``wc - center_c`` steps to the
    agent's right. Out-of-map cells read as ``oob_code``.
    """
    h, w = codes.shape
    fr, fc = FORWARD[orientation]
    rr_, rc_ = RIGHT[orientation]
    out = np.empty((win_h, win_w), dtype=codes.dtype)
    for wr in range(win_h):
        fwd = center_r - wr
        for wc in range(win_w):
            rgt = wc - center_c
            r = row + fwd * fr + rgt * rr_
            c = col + fwd * fc + rgt * rc_
            if r < 0 or r >= h or c < 0 or c >= w:
                out[wr, wc] = oob_code
            else:
                out[wr, wc] = codes[r, c]
    return out


def _extract_window_numpy(codes, row, col, orientation, win_h, win_w,
                          center_r, center_c, oob_code):
    h, w = codes.shape
    fr, fc = FORWARD[orientation]
    rr_, rc_ = RIGHT[orientation]
    fwd = center_r - np.arange(win_h)[:, None]
    rgt = np.arange(win_w)[None, :] - center_c
    r = row + fwd * fr + rgt * rr_
    c = col + fwd * fc + rgt * rc_
    oob = (r < 0) | (r >= h) | (c < 0) | (c >= w)
    out = codes[np.clip(r, 0, h - 1), np.clip(c, 0, w - 1)].copy()
    out[oob] = oob_code
    return out


def _select_backend():
    choice = os.environ.get("SSDLAB_KERNELS", "numba").lower()
    if choice not in ("numba", "numpy"):
        raise ValueError(f"SSDLAB_KERNELS must be 'numba' or 'numpy', got {choice!r}")
    if choice == "numba":
        try:
            from numba import njit
        except ImportError:
            return "numpy"
        global _l1_neighbor_counts_jit, _extract_window_jit
        _l1_neighbor_counts_jit = njit(cache=True)(_l1_neighbor_counts_loop)
        _extract_window_jit = njit(cache=True)(_extract_window_loop)
        return "numba"
    return "numpy"


BACKEND = _select_backend()

if BACKEND == "numba":
    def l1_neighbor_counts(mask, radius):
        return _l1_neighbor_counts_jit(mask, radius)

    def extract_window(codes, row, col, orientation, win_h, win_w,
                       center_r, center_c, oob_code):
        return _extract_window_jit(codes, row, col, orientation, win_h, win_w,
                                   center_r, center_c, oob_code)
else:
    l1_neighbor_counts = _l1_neighbor_counts_numpy
    extract_window = _extract_window_numpy

l1_neighbor_counts.__doc__ = _l1_neighbor_counts_loop.__doc__
extract_window.__doc__ = _extract_window_loop.__doc__
