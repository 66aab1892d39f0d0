"""Uniformly elliptic surface-energy integrands and their graph Lagrangians.

An integrand ``F`` is a positive, one-homogeneous ``C^2`` function on
``R^d \\ {0}`` whose unit ball is uniformly convex.  Minimizing the surface
energy of a graph ``x -> (x, u(x))`` reduces to minimizing the convex bulk
Lagrangian ``f(y) = F(-y, 1)`` of the gradient, so every integrand here
exposes both the ambient calculus (``eval_F``/``grad_F``/``hess_F``) and the
pulled-back one (``eval_f``/``grad_f``/``hess_f``).

Built-in families:

* ``euclidean``  -- the Euclidean norm (isotropic area).
* ``capillary``  -- ``|z| - cos(theta) * z_1``; absorbs a constant contact
  angle against the wall ``{x_1 = 0}`` into a free-boundary problem.
* ``ellipsoid``  -- ``sqrt(z^T A z)`` for SPD ``A``.
* ``pnorm``      -- a regularized p-norm, smoothed so it stays ``C^2`` on
  coordinate hyperplanes.

All derivative formulas are analytic; the centered finite-difference helpers
at the bottom exist only so tests can cross-validate them and must never be
used in a solver path.  Instances are immutable and safe to share across
threads; every method is a pure function of its arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

__all__ = [
    "EllipticIntegrand",
    "IntegrandBounds",
    "sphere_points",
    "fd_gradient",
    "fd_hessian",
]

_GOLDEN_FRAC = (math.sqrt(5.0) - 1.0) / 2.0
# Sample count used when normalization has to fall back on sampling.
_NORMALIZE_SAMPLES = 2 ** 14


@dataclass(frozen=True)
class IntegrandBounds:
    """Sampled range of F on the unit sphere and of its tangential Hessian.

    ``f_min``/``f_max`` bound the sphere values of F (and of ``|DF|``, which
    shares the same exact range); ``hess_min``/``hess_max`` are the extreme
    Rayleigh quotients of the Hessian over directions tangent to the sphere.
    Estimates are inner approximations: more samples can only move ``f_min``
    down and ``f_max`` up, never the reverse.
    """

    f_min: float
    f_max: float
    hess_min: float
    hess_max: float
    sample_count: int

    def __post_init__(self) -> None:
        if not (0.0 < self.f_min <= self.f_max):
            raise ValueError("need 0 < f_min <= f_max")
        if not (0.0 < self.hess_min <= self.hess_max):
            raise ValueError("need 0 < hess_min <= hess_max")


def _van_der_corput(k: np.ndarray) -> np.ndarray:
    """Base-2 van der Corput sequence, vectorized over integer indices."""
    k = np.asarray(k, dtype=np.int64).copy()
    out = np.zeros(k.shape, dtype=float)
    base = 0.5
    while k.any():
        out += base * (k & 1)
        k >>= 1
        base *= 0.5
    return out


def sphere_points(dim: int, count: int) -> np.ndarray:
    """Deterministic quasi-uniform points on the unit sphere in R^dim.

    The sequence is nested: the first ``m`` points of ``sphere_points(d, n)``
    equal ``sphere_points(d, m)`` for ``m <= n``, so sampled extrema refine
    monotonically with the sample count.  ``dim`` must be 2 or 3.
    """
    if count < 1:
        raise ValueError("count must be positive")
    k = np.arange(count)
    azimuth = 2.0 * np.pi * ((k * _GOLDEN_FRAC) % 1.0)
    if dim == 2:
        return np.stack([np.cos(azimuth), np.sin(azimuth)], axis=1)
    if dim == 3:
        z = 1.0 - 2.0 * _van_der_corput(k)
        rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.stack([rho * np.cos(azimuth), rho * np.sin(azimuth), z], axis=1)
    raise ValueError("sphere sampling is implemented for dim in {2, 3}")


def _as_points(z: np.ndarray, dim: int) -> tuple[np.ndarray, bool]:
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != dim:
        raise ValueError(f"expected last axis {dim}, got shape {z.shape}")
    single = z.ndim == 1
    return np.atleast_2d(z), single


@dataclass(frozen=True, eq=False)
class EllipticIntegrand:
    """One of the built-in uniformly elliptic integrands, times a scale.

    Use the constructors :meth:`euclidean`, :meth:`capillary`,
    :meth:`ellipsoid`, :meth:`pnorm` rather than instantiating directly.
    ``scale`` multiplies all values and derivatives; ``normalized`` records
    whether ``scale`` was chosen (via :meth:`normalize`) so the sphere minimum
    of F equals one.
    """

    kind: str
    dim: int
    theta: Optional[float] = None
    matrix: Optional[np.ndarray] = None
    p: Optional[float] = None
    eps: Optional[float] = None
    scale: float = 1.0
    normalized: bool = False

    # -- constructors ------------------------------------------------------

    @staticmethod
    def euclidean(dim: int = 3) -> "EllipticIntegrand":
        _check_dim(dim)
        return EllipticIntegrand(kind="euclidean", dim=dim)

    @staticmethod
    def capillary(theta: float, dim: int = 3) -> "EllipticIntegrand":
        _check_dim(dim)
        if not (0.0 < theta < math.pi):
            raise ValueError("capillary angle must lie strictly inside (0, pi)")
        return EllipticIntegrand(kind="capillary", dim=dim, theta=float(theta))

    @staticmethod
    def ellipsoid(matrix: np.ndarray) -> "EllipticIntegrand":
        a = np.asarray(matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("ellipsoid matrix must be square")
        _check_dim(a.shape[0])
        if not np.allclose(a, a.T, atol=1e-12 * max(1.0, float(np.abs(a).max()))):
            raise ValueError("ellipsoid matrix must be symmetric")
        try:
            np.linalg.cholesky(a)
        except np.linalg.LinAlgError as exc:
            raise ValueError("ellipsoid matrix must be positive definite") from exc
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        return EllipticIntegrand(kind="ellipsoid", dim=a.shape[0], matrix=a)

    @staticmethod
    def pnorm(p: float, dim: int = 3, eps: float = 1e-2) -> "EllipticIntegrand":
        _check_dim(dim)
        if not p > 1.0:
            raise ValueError("pnorm exponent must exceed 1")
        if eps < 0.0:
            raise ValueError("pnorm regularization must be nonnegative")
        return EllipticIntegrand(kind="pnorm", dim=dim, p=float(p), eps=float(eps))

    # -- ambient calculus ---------------------------------------------------

    def eval_F(self, z: np.ndarray) -> np.ndarray:
        """Value of F at ``z`` (last axis = dim); rejects zero vectors."""
        pts, single = _as_points(z, self.dim)
        norms = np.linalg.norm(pts, axis=-1)
        if np.any(norms == 0.0):
            raise ValueError("integrand is undefined at the zero vector")
        if self.kind == "euclidean":
            vals = norms
        elif self.kind == "capillary":
            vals = norms - math.cos(self.theta) * pts[..., 0]
        elif self.kind == "ellipsoid":
            vals = np.sqrt(np.einsum("...i,ij,...j->...", pts, self.matrix, pts))
        else:
            s, _ = self._pnorm_s(pts)
            vals = np.sum(s ** (self.p / 2.0), axis=-1) ** (1.0 / self.p)
        vals = self.scale * vals
        return vals[0] if single else vals

    def grad_F(self, z: np.ndarray) -> np.ndarray:
        """Ambient gradient of F; zero-homogeneous in ``z``."""
        pts, single = _as_points(z, self.dim)
        norms = np.linalg.norm(pts, axis=-1, keepdims=True)
        if np.any(norms == 0.0):
            raise ValueError("integrand is undefined at the zero vector")
        if self.kind == "euclidean":
            g = pts / norms
        elif self.kind == "capillary":
            g = pts / norms
            g[..., 0] -= math.cos(self.theta)
        elif self.kind == "ellipsoid":
            az = pts @ self.matrix
            vals = np.sqrt(np.einsum("...i,...i->...", pts, az))
            g = az / vals[..., None]
        else:
            s, q = self._pnorm_s(pts)
            p, eps = self.p, self.eps
            big_g = np.sum(s ** (p / 2.0), axis=-1)
            t = np.sum(s ** (p / 2.0 - 1.0), axis=-1)
            h = pts * (s ** (p / 2.0 - 1.0) + (eps * eps) * t[..., None])
            g = big_g[..., None] ** (1.0 / p - 1.0) * h
        g = self.scale * g
        return g[0] if single else g

    def hess_F(self, z: np.ndarray) -> np.ndarray:
        """Ambient Hessian of F; annihilates ``z`` and scales like 1/|z|."""
        pts, single = _as_points(z, self.dim)
        norms = np.linalg.norm(pts, axis=-1)
        if np.any(norms == 0.0):
            raise ValueError("integrand is undefined at the zero vector")
        eye = np.eye(self.dim)
        if self.kind in ("euclidean", "capillary"):
            unit = pts / norms[..., None]
            hess = (eye - np.einsum("...i,...j->...ij", unit, unit)) / norms[..., None, None]
        elif self.kind == "ellipsoid":
            az = pts @ self.matrix
            vals = np.sqrt(np.einsum("...i,...i->...", pts, az))
            hess = self.matrix / vals[..., None, None] - np.einsum(
                "...i,...j->...ij", az, az
            ) / (vals ** 3)[..., None, None]
        else:
            hess = self._pnorm_hess(pts)
        hess = self.scale * hess
        return hess[0] if single else hess

    def _pnorm_s(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        q = np.einsum("...i,...i->...", pts, pts)
        s = pts * pts + (self.eps * self.eps) * q[..., None]
        return s, q

    def _pnorm_hess(self, pts: np.ndarray) -> np.ndarray:
        p, eps = self.p, self.eps
        e2 = eps * eps
        s, _ = self._pnorm_s(pts)
        sp1 = s ** (p / 2.0 - 1.0)
        sp2 = s ** (p / 2.0 - 2.0)
        big_g = np.sum(s ** (p / 2.0), axis=-1)
        t = np.sum(sp1, axis=-1)
        u = np.sum(sp2, axis=-1)
        h = pts * (sp1 + e2 * t[..., None])
        eye = np.eye(self.dim)
        zz = np.einsum("...i,...j->...ij", pts, pts)
        k = np.zeros(pts.shape[:-1] + (self.dim, self.dim))
        k[..., np.arange(self.dim), np.arange(self.dim)] = sp1 + e2 * t[..., None]
        k += (p - 2.0) * (
            eye * (pts * pts * sp2)[..., None, :]
            + e2 * zz * (sp2[..., :, None] + sp2[..., None, :])
            + (e2 * e2) * zz * u[..., None, None]
        )
        hess = (1.0 - p) * big_g[..., None, None] ** (1.0 / p - 2.0) * np.einsum(
            "...i,...j->...ij", h, h
        ) + big_g[..., None, None] ** (1.0 / p - 1.0) * k
        return hess

    # -- graph Lagrangian f(y) = F(-y, 1) ------------------------------------

    def _lift(self, y: np.ndarray) -> tuple[np.ndarray, bool]:
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.dim - 1:
            raise ValueError(f"expected gradient dimension {self.dim - 1}")
        single = y.ndim == 1
        y2 = np.atleast_2d(y)
        z = np.concatenate([-y2, np.ones(y2.shape[:-1] + (1,))], axis=-1)
        return z, single

    def eval_f(self, y: np.ndarray) -> np.ndarray:
        """Graph Lagrangian ``f(y) = F(-y, 1)``."""
        z, single = self._lift(y)
        vals = self.eval_F(z)
        return vals[0] if single else vals

    def grad_f(self, y: np.ndarray) -> np.ndarray:
        """Gradient of the graph Lagrangian: ``Df(y)_i = -d_i F(-y, 1)``."""
        z, single = self._lift(y)
        g = -self.grad_F(z)[..., : self.dim - 1]
        return g[0] if single else g

    def hess_f(self, y: np.ndarray) -> np.ndarray:
        """Hessian of the graph Lagrangian (SPD for bounded gradients)."""
        z, single = self._lift(y)
        h = self.hess_F(z)[..., : self.dim - 1, : self.dim - 1]
        return h[0] if single else h

    # -- sphere bounds and normalization -------------------------------------

    def estimate_bounds(self, n_samples: int) -> IntegrandBounds:
        """Sampled sphere range of F and of its tangential Hessian.

        Both the values of F and the norms of its gradient are folded into
        the range (their exact sphere ranges coincide, and this keeps the
        reported interval consistent with every sampled point).
        """
        if n_samples < 100:
            raise ValueError("need at least 100 sphere samples")
        pts = sphere_points(self.dim, n_samples)
        vals = self.eval_F(pts)
        gnorm = np.linalg.norm(self.grad_F(pts), axis=-1)
        f_min = float(min(vals.min(), gnorm.min()))
        f_max = float(max(vals.max(), gnorm.max()))
        hess = self.hess_F(pts)
        if self.dim == 2:
            tang = np.stack([-pts[:, 1], pts[:, 0]], axis=1)
            rq = np.einsum("ki,kij,kj->k", tang, hess, tang)
            hess_min, hess_max = float(rq.min()), float(rq.max())
        else:
            t1 = np.cross(pts, np.where(np.abs(pts[:, :1]) < 0.9, [[1.0, 0, 0]], [[0, 1.0, 0]]))
            t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
            t2 = np.cross(pts, t1)
            a11 = np.einsum("ki,kij,kj->k", t1, hess, t1)
            a22 = np.einsum("ki,kij,kj->k", t2, hess, t2)
            a12 = np.einsum("ki,kij,kj->k", t1, hess, t2)
            half = 0.5 * (a11 + a22)
            disc = np.sqrt(np.maximum(0.0, (0.5 * (a11 - a22)) ** 2 + a12 * a12))
            hess_min, hess_max = float((half - disc).min()), float((half + disc).max())
        return IntegrandBounds(f_min, f_max, hess_min, hess_max, n_samples)

    def analytic_sphere_range(self) -> Optional[tuple[float, float]]:
        """Exact sphere range of F when it has a closed form, else None."""
        if self.kind == "euclidean":
            lo = hi = 1.0
        elif self.kind == "capillary":
            c = abs(math.cos(self.theta))
            lo, hi = 1.0 - c, 1.0 + c
        elif self.kind == "ellipsoid":
            eig = np.linalg.eigvalsh(self.matrix)
            lo, hi = math.sqrt(float(eig[0])), math.sqrt(float(eig[-1]))
        else:
            return None
        return self.scale * lo, self.scale * hi

    def analytic_hess_range(self) -> Optional[tuple[float, float]]:
        """Exact tangential-Hessian eigenvalue range on the sphere, if known."""
        if self.kind in ("euclidean", "capillary"):
            return self.scale, self.scale
        return None

    def sphere_range(self, n_samples: int = _NORMALIZE_SAMPLES) -> tuple[float, float]:
        rng = self.analytic_sphere_range()
        if rng is not None:
            return rng
        b = self.estimate_bounds(n_samples)
        return b.f_min, b.f_max

    def flat_slope(self, lo: float = -1e3, hi: float = 1e3) -> float:
        """Wall-compatible affine slope: the a1 with d/da1 f(a1, 0, ...) = 0.

        The graph a1 * x1 then satisfies both the bulk equation and the
        natural wall condition exactly (for the capillary family this is
        -cot(theta)).  Found by bisection on the strictly increasing
        derivative of the convex profile.
        """
        nres = self.dim - 1

        def dfda(a: float) -> float:
            y = np.zeros(nres)
            y[0] = a
            return float(self.grad_f(y)[0])

        flo, fhi = dfda(lo), dfda(hi)
        if flo > 0.0 or fhi < 0.0:
            raise ValueError("flat-slope bracket does not straddle the minimizer")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if dfda(mid) <= 0.0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def normalize(self) -> "EllipticIntegrand":
        """Rescale so the sphere minimum of F is one (idempotent)."""
        rng = self.analytic_sphere_range()
        if rng is not None:
            base_min = rng[0] / self.scale
        else:
            base_min = self.estimate_bounds(_NORMALIZE_SAMPLES).f_min / self.scale
        return replace(self, scale=1.0 / base_min, normalized=True)

    # -- JSON descriptor ------------------------------------------------------

    def to_descriptor(self) -> dict:
        out: dict = {"kind": self.kind, "dim": self.dim}
        if self.kind == "capillary":
            out["theta"] = self.theta
        elif self.kind == "ellipsoid":
            out["matrix"] = [float(v) for v in np.asarray(self.matrix).ravel()]
        elif self.kind == "pnorm":
            out["p"] = self.p
            out["eps"] = self.eps
        if self.scale != 1.0:
            out["scale"] = self.scale
        if self.normalized:
            out["normalized"] = True
        return out

    @staticmethod
    def from_descriptor(desc: dict) -> "EllipticIntegrand":
        """Parse a JSON descriptor, validating angles and SPD matrices."""
        if not isinstance(desc, dict) or "kind" not in desc:
            raise ValueError("integrand descriptor must be an object with a 'kind'")
        kind = desc["kind"]
        dim = int(desc.get("dim", 3))
        if kind == "euclidean":
            integrand = EllipticIntegrand.euclidean(dim)
        elif kind == "capillary":
            if "theta" not in desc:
                raise ValueError("capillary descriptor needs 'theta'")
            integrand = EllipticIntegrand.capillary(float(desc["theta"]), dim)
        elif kind == "ellipsoid":
            raw = np.asarray(desc.get("matrix"), dtype=float)
            if raw.ndim == 1:
                if raw.size != dim * dim:
                    raise ValueError("row-major matrix must have dim*dim entries")
                raw = raw.reshape(dim, dim)
            integrand = EllipticIntegrand.ellipsoid(raw)
        elif kind == "pnorm":
            integrand = EllipticIntegrand.pnorm(
                float(desc.get("p", 3.0)), dim, float(desc.get("eps", 1e-2))
            )
        else:
            raise ValueError(f"unknown integrand kind {kind!r}")
        scale = float(desc.get("scale", 1.0))
        if scale <= 0.0:
            raise ValueError("integrand scale must be positive")
        return replace(integrand, scale=scale, normalized=bool(desc.get("normalized", False)))


def _check_dim(dim: int) -> None:
    if dim < 2:
        raise ValueError("ambient dimension must be at least 2")


# -- finite-difference cross-checks (test utilities only) ---------------------


def fd_gradient(fn: Callable[[np.ndarray], float], z: np.ndarray, step: Optional[float] = None) -> np.ndarray:
    """Centered finite-difference gradient; for cross-validation in tests only."""
    z = np.asarray(z, dtype=float)
    h = step if step is not None else 1e-6 * max(np.linalg.norm(z), 1.0)
    out = np.zeros_like(z)
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h
        out[i] = (fn(z + e) - fn(z - e)) / (2.0 * h)
    return out


def fd_hessian(fn: Callable[[np.ndarray], float], z: np.ndarray, step: Optional[float] = None) -> np.ndarray:
    """Centered finite-difference Hessian; for cross-validation in tests only."""
    z = np.asarray(z, dtype=float)
    h = step if step is not None else 1e-5 * max(np.linalg.norm(z), 1.0)
    d = z.size
    out = np.zeros((d, d))
    f0 = fn(z)
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h
        out[i, i] = (fn(z + ei) - 2.0 * f0 + fn(z - ei)) / (h * h)
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = h
            out[i, j] = out[j, i] = (
                fn(z + ei + ej) - fn(z + ei - ej) - fn(z - ei + ej) + fn(z - ei - ej)
            ) / (4.0 * h * h)
    return out
