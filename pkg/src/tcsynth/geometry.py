"""Skew and sinusoidal distortion of a foreground/mask pair."""

from __future__ import annotations

import math
from dataclasses import dataclass

import cv2
import numpy as np


@dataclass(frozen=True)
class GeometryParams:
    skew_deg: float = 0.0
    v_amp_px: float = 0.0
    v_freq: float = 1.0
    v_phase: float = 0.0
    h_amp_px: float = 0.0
    h_freq: float = 1.0
    h_phase: float = 0.0

    def __post_init__(self) -> None:
        if self.v_amp_px < 0 or self.h_amp_px < 0:
            raise ValueError("amplitudes must be >= 0")
        if self.v_freq <= 0 or self.h_freq <= 0:
            raise ValueError("frequencies must be > 0")

    @property
    def is_identity(self) -> bool:
        return self.skew_deg == 0 and self.v_amp_px == 0 and self.h_amp_px == 0


IDENTITY = GeometryParams()


@dataclass(frozen=True)
class GeometryRanges:
    """Sampling ranges. These defaults are engine choices kept mild for legibility."""

    skew_deg: tuple[float, float] = (-7.0, 7.0)
    amplitude_px: tuple[float, float] = (0.0, 3.0)
    frequency: tuple[float, float] = (0.5, 2.0)
    p_identity: float = 0.3

    def __post_init__(self) -> None:
        for name in ("skew_deg", "amplitude_px", "frequency"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name}: min {lo} > max {hi}")
        if self.amplitude_px[0] < 0:
            raise ValueError("amplitude_px must be >= 0")
        if self.frequency[0] <= 0:
            raise ValueError("frequency must be > 0")
        if not 0 <= self.p_identity <= 1:
            raise ValueError("p_identity must be in [0, 1]")


def sample_geometry(ranges: GeometryRanges, rng: np.random.Generator) -> GeometryParams:
    if rng.random() < ranges.p_identity:
        return IDENTITY
    skew, va, vf, vp, ha, hf, hp = rng.random(7)
    lerp = lambda r, t: r[0] + (r[1] - r[0]) * float(t)  # noqa: E731
    params = GeometryParams(
        skew_deg=lerp(ranges.skew_deg, skew),
        v_amp_px=lerp(ranges.amplitude_px, va),
        v_freq=lerp(ranges.frequency, vf),
        v_phase=2 * math.pi * float(vp),
        h_amp_px=lerp(ranges.amplitude_px, ha),
        h_freq=lerp(ranges.frequency, hf),
        h_phase=2 * math.pi * float(hp),
    )
    return IDENTITY if params.is_identity else params


def displacement_maps(shape: tuple[int, int], params: GeometryParams) -> tuple[np.ndarray, np.ndarray]:
    """Inverse sampling maps ``(map_x, map_y)`` onto an expanded output canvas.

    Forward model: rotate by ``skew_deg`` (counterclockwise) about the center,
    shift each column vertically by ``v_amp*sin(2*pi*v_freq*x/W + v_phase)``,
    then each row horizontally by ``h_amp*sin(2*pi*h_freq*y/H + h_phase)``,
    with x, y, W, H measured on the output canvas.
    """
    h, w = shape
    t = math.radians(params.skew_deg)
    c, s = math.cos(t), math.sin(t)
    rot_w = math.ceil(w * abs(c) + h * abs(s))
    rot_h = math.ceil(w * abs(s) + h * abs(c))
    # +2: one pixel for bilinear spread, one so ink stays strictly inside
    pad_x = math.ceil(params.h_amp_px) + 2
    pad_y = math.ceil(params.v_amp_px) + 2
    out_w = rot_w + 2 * pad_x
    out_h = rot_h + 2 * pad_y

    yo, xo = np.mgrid[0:out_h, 0:out_w].astype(np.float64)
    xb = xo - params.h_amp_px * np.sin(2 * math.pi * params.h_freq * yo / out_h + params.h_phase)
    # the vertical shift happened before the horizontal one, so it saw column xb
    yb = yo - params.v_amp_px * np.sin(2 * math.pi * params.v_freq * xb / out_w + params.v_phase)
    dx = xb - (out_w - 1) / 2
    dy = yb - (out_h - 1) / 2
    map_x = c * dx - s * dy + (w - 1) / 2
    map_y = s * dx + c * dy + (h - 1) / 2
    return map_x.astype(np.float32), map_y.astype(np.float32)


def apply_geometry(
    foreground: np.ndarray, mask: np.ndarray, params: GeometryParams
) -> tuple[np.ndarray, np.ndarray]:
    """Warp ``foreground`` and ``mask`` with one shared displacement field.

    Resampling is bilinear on premultiplied values, so a flat foreground stays
    exactly flat wherever the mask is nonzero. Outside the source the mask is
    transparent. The result is cropped to the ink plus a one-pixel clear border.
    """
    if foreground.shape != mask.shape:
        raise ValueError(f"shape mismatch: {foreground.shape} vs {mask.shape}")
    if params.is_identity:
        return foreground.copy(), mask.copy()

    map_x, map_y = displacement_maps(mask.shape, params)
    a = mask.astype(np.float32)
    src = np.dstack([foreground.astype(np.float32) * a, a])
    out = cv2.remap(src, map_x, map_y, cv2.INTER_LINEAR, borderMode=cv2.BORDER_CONSTANT, borderValue=0)
    premul, alpha = out[..., 0], out[..., 1]
    new_mask = np.clip(np.rint(alpha), 0, 255).astype(np.uint8)
    new_fg = np.zeros_like(new_mask)
    ink = new_mask > 0
    new_fg[ink] = np.clip(np.rint(premul[ink] / alpha[ink]), 0, 255).astype(np.uint8)

    ys, xs = np.nonzero(new_mask)
    if len(ys) == 0:
        return new_fg, new_mask
    y0, y1 = max(ys.min() - 1, 0), min(ys.max() + 2, new_mask.shape[0])
    x0, x1 = max(xs.min() - 1, 0), min(xs.max() + 2, new_mask.shape[1])
    return new_fg[y0:y1, x0:x1].copy(), new_mask[y0:y1, x0:x1].copy()


def trim_to_ink(foreground: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ys, xs = np.nonzero(mask)
    if len(ys) == 0:
        return foreground, mask
    sl = (slice(ys.min(), ys.max() + 1), slice(xs.min(), xs.max() + 1))
    return foreground[sl].copy(), mask[sl].copy()
