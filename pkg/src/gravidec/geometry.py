"""Interferometer configuration: the atomic rhomb and the Raman laser paths.

The rhomb lies in the (x¹, x³) plane with apexes

    A = (-τ_AB, -x_D),  B = (0, (0, 0, ℓ sinα)),  C = (0, -x_B),  D = (τ_AB, (ℓ cosα, 0, 0))

written as (t, x) with ℓ = v_at τ_AB.  The lasers propagate along x³ and the
optical path geometry is identical at every apex.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import C, HBAR

APEXES = ("A", "B", "C", "D")
#: sign of each apex in the photonic sum Φ[A] - Φ[B] - Φ[C] + Φ[D]
APEX_SIGNS = {"A": 1, "B": -1, "C": -1, "D": 1}
LASER_AXIS = np.array([0.0, 0.0, 1.0])


class GeometryError(ValueError):
    """Raised when an instrument parameter is out of range; names the field."""


def _require(cond, name, value, rule):
    if not cond:
        raise GeometryError(f"{name}={value!r}: {rule}")


@dataclass(frozen=True)
class RhombGeometry:
    """Symmetric Mach-Zehnder rhomb.

    ``alpha = 0`` and ``tau_ab = 0`` are admitted as degenerate instruments
    whose responses vanish.
    """

    alpha: float
    v_at: float
    tau_ab: float
    mass: float

    def __post_init__(self):
        _require(0.0 <= self.alpha < math.pi / 4, "alpha", self.alpha, "need 0 <= 2*alpha < pi/2")
        _require(0.0 < self.v_at < 1e-3 * C, "v_at", self.v_at, "need 0 < v_at < 1e-3 c")
        _require(self.tau_ab >= 0.0 and math.isfinite(self.tau_ab), "tau_ab", self.tau_ab, "need tau_ab >= 0")
        _require(self.mass > 0.0, "mass", self.mass, "need mass > 0")

    @property
    def ell_ab(self):
        return self.v_at * self.tau_ab

    @property
    def omega_at(self):
        """Kinetic energy as an angular frequency, m v²/(2ħ)."""
        return self.mass * self.v_at**2 / (2 * HBAR)

    @property
    def sin2a(self):
        return math.sin(2 * self.alpha)

    @property
    def k0(self):
        """Probe wavevector m c / ħ."""
        return self.mass * C / HBAR

    @property
    def beta(self):
        return self.v_at / C

    def apexes(self):
        """{name: (t, x)} for the four apexes."""
        l, a, t = self.ell_ab, self.alpha, self.tau_ab
        xd = np.array([l * math.cos(a), 0.0, 0.0])
        xb = np.array([0.0, 0.0, l * math.sin(a)])
        return {"A": (-t, -xd), "B": (0.0, xb), "C": (0.0, -xb), "D": (t, xd)}

    def velocities(self):
        """Reduced velocities u = v/c of the four segments."""
        b = self.beta
        u_ab = b * np.array([math.cos(self.alpha), 0.0, math.sin(self.alpha)])
        u_bd = b * np.array([math.cos(self.alpha), 0.0, -math.sin(self.alpha)])
        return {"AB": u_ab, "BD": u_bd, "AC": u_bd.copy(), "CD": u_ab.copy()}

    def segments(self):
        """(name, start, end, u, sign) for the arms; ABD counts +, ACD counts -."""
        ap = self.apexes()
        u = self.velocities()
        out = []
        for name, sign in (("AB", 1), ("BD", 1), ("AC", -1), ("CD", -1)):
            out.append((name, ap[name[0]], ap[name[1]], u[name], sign))
        return out


@dataclass(frozen=True)
class RamanOptics:
    """Raman beam-splitter optics, identical at every apex.

    Photons run L → M (along +x³, τ_LM), M → atom (along -x³, τ_MB) and
    L' → atom (along +x³, τ_LM - τ_MB).
    """

    omega_phot: float
    tau_mb: float
    tau_lm: float
    mass: float

    def __post_init__(self):
        _require(self.omega_phot > 0, "omega_phot", self.omega_phot, "need omega_phot > 0")
        _require(self.tau_mb > 0, "tau_mb", self.tau_mb, "need tau_mb > 0")
        _require(self.tau_lm > 0, "tau_lm", self.tau_lm, "need tau_lm > 0")
        _require(self.mass > 0, "mass", self.mass, "need mass > 0")

    @property
    def v_trans(self):
        """Transverse recoil velocity 2ħΩ_phot/(m c)."""
        return 2 * HBAR * self.omega_phot / (self.mass * C)

    @property
    def x(self):
        return self.tau_lm / self.tau_mb

    @property
    def k0(self):
        return self.omega_phot / C

    def events(self, t_b, x_b):
        """Events M, L, L' for the Raman process at the apex (t_b, x_b)."""
        x_b = np.asarray(x_b, dtype=float)
        ez = LASER_AXIS
        t_m, x_m = t_b - self.tau_mb, x_b + C * self.tau_mb * ez
        t_l = t_b - (self.tau_mb + self.tau_lm)
        x_l = x_b - C * (self.tau_lm - self.tau_mb) * ez
        t_lp = t_b - (self.tau_lm - self.tau_mb)
        return {"M": (t_m, x_m), "L": (t_l, x_l), "L'": (t_lp, x_l.copy())}

    def legs(self, t_b, x_b):
        """(name, start, end, u, sign) for the photon legs ending at an apex."""
        ev = self.events(t_b, x_b)
        end = (t_b, np.asarray(x_b, dtype=float))
        ez = LASER_AXIS
        return [
            ("LM", ev["L"], ev["M"], ez, 1),
            ("MB", ev["M"], end, -ez, 1),
            ("L'B", ev["L'"], end, ez, -1),
        ]


def make_rhomb(alpha, v_at, tau_ab, mass) -> RhombGeometry:
    return RhombGeometry(float(alpha), float(v_at), float(tau_ab), float(mass))


def rhomb_from_kick(v_trans, v_at, tau_ab, mass) -> RhombGeometry:
    """Rhomb whose aperture follows the recoil, sin(2α) = v_trans / v_at."""
    ratio = v_trans / v_at
    _require(0.0 <= ratio < 1.0, "v_trans", v_trans, "need 0 <= v_trans < v_at")
    return make_rhomb(0.5 * math.asin(ratio), v_at, tau_ab, mass)


def make_raman(omega_phot, tau_mb, tau_lm, mass) -> RamanOptics:
    return RamanOptics(float(omega_phot), float(tau_mb), float(tau_lm), float(mass))


PRESETS = {
    "hyper-cs": {
        "mass": 2e-25,
        "v_at": 0.2,
        "tau_ab": 1.5,
        "sin2alpha": 0.035,
        "omega_phot": 2e15,
        "tau_mb": 1e-9,
        "tau_lm": 3e-9,
        "s_h": 1e-34,
        "band_hz": (1e-6, 1e-4),
        "tau_av": 86400.0,
    },
}


def hyper_instrument(mass, v_at, tau_ab, sin2alpha, omega_phot, tau_mb, tau_lm, rel_tol=0.02):
    """Rhomb plus optics, checking that sin(2α) matches v_trans / v_at."""
    optics = make_raman(omega_phot, tau_mb, tau_lm, mass)
    kick = optics.v_trans / v_at
    if abs(sin2alpha - kick) > rel_tol * abs(kick):
        raise GeometryError(
            f"sin2alpha={sin2alpha!r}: inconsistent with v_trans/v_at={kick:.6g} (tolerance {rel_tol:.0%})")
    g = make_rhomb(0.5 * math.asin(sin2alpha), v_at, tau_ab, mass)
    return g, optics


def preset_instrument(name="hyper-cs"):
    try:
        p = PRESETS[name]
    except KeyError:
        raise GeometryError(f"preset={name!r}: unknown (available: {', '.join(PRESETS)})") from None
    return hyper_instrument(p["mass"], p["v_at"], p["tau_ab"], p["sin2alpha"],
                            p["omega_phot"], p["tau_mb"], p["tau_lm"])
