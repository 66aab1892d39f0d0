"""Named boundary-data functions evaluated from small JSON-able specs."""

from __future__ import annotations

import numpy as np

__all__ = ["evaluate_data_spec"]


def evaluate_data_spec(spec: dict, points: np.ndarray) -> np.ndarray:
    """Evaluate a Dirichlet-data spec at an array of points (npts, n).

    Supported types:
      affine  {a: [..], b}            -> <a, x> + b
      sine    {amplitude, kx, ky, phase} -> A sin(kx x1 + phase) cos(ky x2)
      bump    {center: [..], radius, height} -> smooth compact bump
      table   {points: [[coords..., value], ...]} -> nearest-neighbor lookup
      sum     {terms: [spec, ...]}    -> sum of sub-specs
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError("points must be a 2d array")
    n = pts.shape[1]
    if not isinstance(spec, dict) or "type" not in spec:
        raise ValueError("data spec must be an object with a 'type'")
    kind = spec["type"]
    if kind == "affine":
        a = np.asarray(spec.get("a", [0.0] * n), dtype=float)
        if a.shape != (n,):
            raise ValueError(f"affine slope must have {n} components")
        return pts @ a + float(spec.get("b", 0.0))
    if kind == "sine":
        amp = float(spec.get("amplitude", 1.0))
        kx = float(spec.get("kx", 1.0))
        phase = float(spec.get("phase", 0.0))
        out = amp * np.sin(kx * pts[:, 0] + phase)
        if n == 2:
            ky = float(spec.get("ky", 0.0))
            out = out * np.cos(ky * pts[:, 1])
        return out
    if kind == "bump":
        center = np.asarray(spec.get("center", [0.0] * n), dtype=float)
        if center.shape != (n,):
            raise ValueError(f"bump center must have {n} components")
        radius = float(spec.get("radius", 1.0))
        height = float(spec.get("height", 1.0))
        if radius <= 0.0:
            raise ValueError("bump radius must be positive")
        d = np.linalg.norm(pts - center, axis=1)
        out = np.zeros(pts.shape[0])
        inside = d < radius
        out[inside] = height * np.cos(0.5 * np.pi * d[inside] / radius) ** 2
        return out
    if kind == "table":
        rows = np.asarray(spec.get("points", []), dtype=float)
        if rows.ndim != 2 or rows.shape[1] != n + 1 or rows.shape[0] == 0:
            raise ValueError("table rows must be [coords..., value] and nonempty")
        locs, vals = rows[:, :n], rows[:, n]
        d2 = ((pts[:, None, :] - locs[None, :, :]) ** 2).sum(axis=2)
        return vals[np.argmin(d2, axis=1)]
    if kind == "sum":
        terms = spec.get("terms", [])
        if not terms:
            raise ValueError("sum spec needs at least one term")
        out = np.zeros(pts.shape[0])
        for term in terms:
            out = out + evaluate_data_spec(term, pts)
        return out
    raise ValueError(f"unknown data spec type {kind!r}")
