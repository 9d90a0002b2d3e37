"""Propagation directions, circular polarisation vectors and sphere averages.

Directions are parameterised by the polar angle θ and azimuth φ of the unit
vector n = ck/ω.  The helicity basis is fixed (no phase freedom):

    e^γ = (-cosθ cosφ + iγ sinφ, -cosθ sinφ - iγ cosφ, sinθ)

so that n·e = 0, e·e = 0 and e·e* = 2.  The negative-frequency partner of a
mode uses the complex conjugate vector, conj(e^γ) = e^{-γ}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

HELICITIES = (1, -1)


class QuadratureConfigError(ValueError):
    """Raised for invalid angular quadrature settings."""


@dataclass(frozen=True)
class Direction:
    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        object.__setattr__(self, "phi", float(self.phi) % (2 * math.pi))


def _check_helicity(gamma):
    if gamma not in HELICITIES:
        raise ValueError(f"helicity must be +1 or -1, got {gamma!r}")


def unit_vectors(theta, phi):
    """Array form of n(θ, φ); output has a trailing axis of length 3."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack(np.broadcast_arrays(st * np.cos(phi), st * np.sin(phi), np.cos(theta)), axis=-1)


def polarization_vectors(theta, phi, gamma):
    """Array form of e^γ(θ, φ); output has a trailing axis of length 3."""
    _check_helicity(gamma)
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    e1 = -ct * cp + 1j * gamma * sp
    e2 = -ct * sp - 1j * gamma * cp
    e3 = st + 0j
    return np.stack(np.broadcast_arrays(e1, e2, e3), axis=-1)


def direction_vector(d: Direction) -> np.ndarray:
    return unit_vectors(d.theta, d.phi)


def polarization_vector(d: Direction, gamma: int) -> np.ndarray:
    return polarization_vectors(d.theta, d.phi, gamma)


def polarization_tensor(d: Direction, gamma: int) -> np.ndarray:
    """Symmetric traceless transverse tensor e_i e_j / √2."""
    e = polarization_vector(d, gamma)
    return np.outer(e, e) / math.sqrt(2.0)


def random_directions(rng: np.random.Generator, n: int):
    """Isotropic sample of ``n`` directions as (theta, phi) arrays."""
    u = rng.uniform(-1.0, 1.0, n)
    phi = rng.uniform(0.0, 2 * math.pi, n)
    return np.arccos(u), phi


def rotate_directions(rot: np.ndarray, theta, phi):
    """Apply a rotation matrix to directions; returns rotated (theta, phi)."""
    n = unit_vectors(theta, phi) @ np.asarray(rot).T
    th = np.arccos(np.clip(n[..., 2], -1.0, 1.0))
    ph = np.mod(np.arctan2(n[..., 1], n[..., 0]), 2 * math.pi)
    return th, ph


def composite_gauss_legendre(n, breaks=(-1.0, 1.0)):
    """Composite Gauss-Legendre nodes/weights on [breaks[0], breaks[-1]].

    ``n`` nodes are placed in every sub-interval.  Weights integrate (they
    are not normalised).
    """
    x, w = np.polynomial.legendre.leggauss(n)
    b = np.asarray(sorted(set(float(v) for v in breaks)), dtype=float)
    a, c = b[:-1, None], b[1:, None]
    nodes = 0.5 * (c - a) * x[None, :] + 0.5 * (c + a)
    weights = 0.5 * (c - a) * w[None, :]
    return nodes.ravel(), weights.ravel()


@dataclass(frozen=True)
class AngularQuadrature:
    """Normalised quadrature rule for ⟨·⟩ over the unit sphere.

    ``kind`` is ``"gauss-legendre"`` (product of Gauss-Legendre in cosθ and
    the uniform trapezoid rule in φ) or ``"monte-carlo"`` (``n_samples``
    isotropic points drawn from ``seed``).  ``u_breaks`` optionally splits
    the cosθ range into Gauss-Legendre sub-panels, which helps integrands
    with kinks in cosθ.
    """

    kind: str = "gauss-legendre"
    n_theta: int = 64
    n_phi: int = 128
    n_samples: int = 0
    seed: int | None = None
    u_breaks: tuple = ()
    _cache: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.kind == "gauss-legendre":
            if self.n_theta < 1 or self.n_phi < 1:
                raise QuadratureConfigError("n_theta and n_phi must be >= 1")
            if any(not -1.0 < b < 1.0 for b in self.u_breaks):
                raise QuadratureConfigError("u_breaks must lie strictly inside (-1, 1)")
        elif self.kind == "monte-carlo":
            if self.n_samples < 1:
                raise QuadratureConfigError("n_samples must be >= 1 for monte-carlo rules")
        else:
            raise QuadratureConfigError(f"unknown quadrature kind {self.kind!r}")

    def cos_rule(self):
        """1-D rule in u = cosθ, weights summing to 1 (GL kind only)."""
        if self.kind != "gauss-legendre":
            raise QuadratureConfigError("cos_rule needs a gauss-legendre rule")
        if "u" not in self._cache:
            u, w = composite_gauss_legendre(self.n_theta, (-1.0, *self.u_breaks, 1.0))
            self._cache["u"] = (u, w / w.sum())
        return self._cache["u"]

    def phi_rule(self):
        phi = 2 * math.pi * np.arange(self.n_phi) / self.n_phi
        return phi, np.full(self.n_phi, 1.0 / self.n_phi)

    def nodes(self):
        """Flattened (theta, phi, weights) with weights summing to 1."""
        if "nodes" not in self._cache:
            if self.kind == "gauss-legendre":
                u, wu = self.cos_rule()
                phi, wp = self.phi_rule()
                th = np.repeat(np.arccos(u), phi.size)
                ph = np.tile(phi, u.size)
                w = np.outer(wu, wp).ravel()
            else:
                rng = np.random.default_rng(self.seed)
                th, ph = random_directions(rng, self.n_samples)
                w = np.full(self.n_samples, 1.0 / self.n_samples)
            self._cache["nodes"] = (th, ph, w)
        return self._cache["nodes"]

    def refined(self):
        """The same rule with doubled node counts (used for error checks)."""
        if self.kind == "gauss-legendre":
            return AngularQuadrature(self.kind, 2 * self.n_theta, 2 * self.n_phi,
                                     u_breaks=self.u_breaks)
        return AngularQuadrature(self.kind, n_samples=4 * self.n_samples,
                                 seed=None if self.seed is None else self.seed + 1)


DEFAULT_QUADRATURE = AngularQuadrature()


def angular_average(f, q: AngularQuadrature = DEFAULT_QUADRATURE):
    """Normalised sphere mean ⟨f⟩ = ∫ d²n/4π f(n).

    ``f(theta, phi)`` receives 1-D node arrays and returns values whose
    leading axis runs over the nodes; any trailing axes are kept.
    """
    th, ph, w = q.nodes()
    vals = np.asarray(f(th, ph))
    res = np.tensordot(w, vals, axes=(0, 0))
    return res.item() if np.ndim(res) == 0 else res
