"""Axis-angle helpers: canonicalization and shortest-arc track interpolation."""
from __future__ import annotations

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

# Fractional sample positions this close to a grid node snap onto it, so that
# rate-identity resampling and node-aligned outputs copy input rows bit-exactly.
_NODE_SNAP = 1e-9


def canonicalize_axis_angle(vecs: np.ndarray) -> np.ndarray:
    """Map axis-angle vectors of any magnitude onto the canonical ball |v| <= pi.

    Works on any [..., 3] array; float64 math, dtype of the input preserved.
    """
    v = np.asarray(vecs)
    out = v.astype(np.float64).copy()
    flat = out.reshape(-1, 3)
    mag = np.linalg.norm(flat, axis=1)
    over = mag > np.pi
    if np.any(over):
        m = mag[over]
        wrapped = np.mod(m, 2.0 * np.pi)
        # angle in (pi, 2*pi) is the same rotation as (wrapped - 2*pi) about
        # the same axis; scaling by the signed ratio flips axis when needed
        signed = np.where(wrapped > np.pi, wrapped - 2.0 * np.pi, wrapped)
        flat[over] *= (signed / m)[:, None]
    return out.reshape(v.shape).astype(v.dtype, copy=False)


def _interp_weights(frame_count_in: int, fps_in: float, frame_count_out: int,
                    fps_out: float) -> tuple[np.ndarray, np.ndarray]:
    """Map output frame indices onto fractional input positions.

    Returns (lower input index, fractional weight toward the next index),
    with positions clamped to the input range and near-integers snapped.
    """
    i_out = np.arange(frame_count_out, dtype=np.float64)
    x = i_out * (fps_in / fps_out)
    x = np.clip(x, 0.0, frame_count_in - 1)
    lo = np.floor(x).astype(np.int64)
    w = x - lo
    snap_up = w > 1.0 - _NODE_SNAP
    lo[snap_up] += 1
    w[snap_up] = 0.0
    w[w < _NODE_SNAP] = 0.0
    lo = np.minimum(lo, frame_count_in - 1)
    return lo, w


def lerp_track(values: np.ndarray, lo: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Linear interpolation of a [T, ...] track at fractional positions."""
    vals = np.asarray(values, dtype=np.float64)
    hi = np.minimum(lo + 1, vals.shape[0] - 1)
    wexp = w.reshape((-1,) + (1,) * (vals.ndim - 1))
    out = vals[lo] * (1.0 - wexp) + vals[hi] * wexp
    exact = w == 0.0
    out[exact] = vals[lo[exact]]
    return out.astype(values.dtype, copy=False)


def nearest_track(values: np.ndarray, lo: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Nearest-neighbor pick of a [T, ...] track; never fabricates values."""
    vals = np.asarray(values)
    idx = lo + (w >= 0.5)
    idx = np.minimum(idx, vals.shape[0] - 1)
    return vals[idx].copy()


def slerp_track(rotvecs: np.ndarray, lo: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Shortest-arc spherical interpolation of a [T, 3] axis-angle track.

    Node-aligned outputs (w == 0) copy the input row bit-exactly, which also
    makes constant tracks a fixed point of resampling.
    """
    vecs = np.asarray(rotvecs)
    t = vecs.shape[0]
    out = np.empty((lo.shape[0], 3), dtype=vecs.dtype)
    exact = w == 0.0
    out[exact] = vecs[lo[exact]]
    need = ~exact
    if np.any(need):
        hi = np.minimum(lo + 1, t - 1)
        same = np.all(vecs[lo] == vecs[hi], axis=1)
        const = need & same
        out[const] = vecs[lo[const]]
        interp = need & ~same
        if np.any(interp):
            keys = Rotation.from_rotvec(vecs.astype(np.float64))
            slerp = Slerp(np.arange(t, dtype=np.float64), keys)
            pos = lo[interp] + w[interp]
            out[interp] = slerp(pos).as_rotvec().astype(vecs.dtype)
    return out
