"""Stochastic gravitational-wave background spectra.

All frequencies are angular frequencies in rad/s.  The strain spectral density
follows the two-sided convention

    <h_12(t) h_12(0)> = \\int dω/2π  S_h(ω) exp(-iωt),

so ``S_h`` is even in ω and the variance of a single metric component is
``∫_band dω/π S_h`` when the band is restricted to positive ω.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .constants import C, HBAR, K_B, STRAIN_THERMAL_COEFF


class BackgroundKind(str, Enum):
    FLAT = "flat"
    POWER_LAW = "powerlaw"
    TABULATED = "tabulated"


class BackgroundError(ValueError):
    """Raised for malformed background descriptions."""


def _check_band(band):
    lo, hi = float(band[0]), float(band[1])
    if not (lo > 0.0 and hi > lo) or math.isnan(hi):
        raise BackgroundError(f"band must satisfy 0 < omega_min < omega_max, got {band!r}")
    return lo, hi


@dataclass(frozen=True)
class GwBackground:
    """Band-limited strain spectral density S_h(ω) in Hz⁻¹.

    Build instances with :meth:`flat`, :meth:`power_law`, :meth:`tabulated` or
    :meth:`from_file`; they validate at construction and are immutable.
    The upper band edge may be ``math.inf``.
    """

    kind: BackgroundKind
    band: tuple[float, float]
    flat_level: float = 0.0
    segments: tuple[tuple[float, float, float], ...] = ()
    table_omega: tuple[float, ...] = ()
    table_sh: tuple[float, ...] = ()
    _log_omega: np.ndarray = field(default=None, repr=False, compare=False)

    # -- constructors -----------------------------------------------------
    @classmethod
    def flat(cls, level, band):
        level = float(level)
        if not level >= 0.0 or math.isinf(level):
            raise BackgroundError(f"flat level must be finite and >= 0, got {level!r}")
        return cls(BackgroundKind.FLAT, _check_band(band), flat_level=level)

    @classmethod
    def power_law(cls, segments, band):
        """Piecewise power law.

        ``segments`` is a sequence of ``(omega_break, level, exponent)``; on
        ``[omega_break_i, omega_break_{i+1})`` the density is
        ``level_i * (ω / omega_break_i) ** exponent_i``.
        """
        segs = tuple((float(w), float(s), float(p)) for w, s, p in segments)
        if not segs:
            raise BackgroundError("power-law background needs at least one segment")
        breaks = [w for w, _, _ in segs]
        if any(w <= 0 for w in breaks) or any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])):
            raise BackgroundError("segment break frequencies must be positive and strictly increasing")
        if any(s < 0 or not math.isfinite(s) for _, s, _ in segs):
            raise BackgroundError("segment levels must be finite and >= 0")
        lo, hi = _check_band(band)
        if lo < breaks[0]:
            raise BackgroundError("band starts below the first segment break")
        return cls(BackgroundKind.POWER_LAW, (lo, hi), segments=segs)

    @classmethod
    def tabulated(cls, omega, sh, band=None):
        """Log-log linear interpolation through ``(omega, sh)`` nodes."""
        w = np.asarray(omega, dtype=float)
        s = np.asarray(sh, dtype=float)
        if w.ndim != 1 or w.shape != s.shape or w.size < 2:
            raise BackgroundError("table needs two matching 1-D columns with at least 2 rows")
        if np.any(w <= 0) or np.any(np.diff(w) <= 0):
            raise BackgroundError("table frequencies must be positive and strictly increasing")
        if np.any(s < 0) or not np.all(np.isfinite(s)):
            raise BackgroundError("table spectral densities must be finite and >= 0")
        if band is None:
            band = (w[0], w[-1])
        lo, hi = _check_band(band)
        if lo < w[0] or hi > w[-1]:
            raise BackgroundError("band must lie inside the tabulated frequency range")
        bg = cls(BackgroundKind.TABULATED, (lo, hi),
                 table_omega=tuple(w.tolist()), table_sh=tuple(s.tolist()))
        object.__setattr__(bg, "_log_omega", np.log(w))
        return bg

    @classmethod
    def from_file(cls, path, band_hz=None):
        """Load a two-column text file: frequency in Hz, S_h in Hz⁻¹.

        Lines starting with ``#`` are ignored.  Frequencies are converted to
        rad/s.
        """
        try:
            data = np.loadtxt(Path(path), comments="#", ndmin=2)
        except ValueError as exc:
            raise BackgroundError(f"cannot parse spectrum table {path}: {exc}") from None
        if data.shape[1] != 2:
            raise BackgroundError(f"{path}: expected 2 columns, found {data.shape[1]}")
        band = None if band_hz is None else (2 * math.pi * band_hz[0], 2 * math.pi * band_hz[1])
        return cls.tabulated(2 * math.pi * data[:, 0], data[:, 1], band=band)

    # -- evaluation -------------------------------------------------------
    def __call__(self, omega):
        return evaluate_sh(self, omega)

    def breakpoints(self):
        """Frequencies inside the band where S_h is not smooth."""
        lo, hi = self.band
        if self.kind is BackgroundKind.POWER_LAW:
            pts = [w for w, _, _ in self.segments]
        elif self.kind is BackgroundKind.TABULATED:
            pts = list(self.table_omega)
        else:
            pts = []
        return sorted(p for p in pts if lo < p < hi)

    def scaled(self, factor):
        """A copy with S_h multiplied by ``factor``."""
        factor = float(factor)
        if self.kind is BackgroundKind.FLAT:
            return GwBackground.flat(self.flat_level * factor, self.band)
        if self.kind is BackgroundKind.POWER_LAW:
            return GwBackground.power_law([(w, s * factor, p) for w, s, p in self.segments], self.band)
        return GwBackground.tabulated(self.table_omega, np.asarray(self.table_sh) * factor, self.band)

    def band_integral(self):
        """∫_band dω/π S_h(ω): the variance of h_12 at a fixed point."""
        from scipy.integrate import quad

        lo, hi = self.band
        if self.kind is BackgroundKind.FLAT:
            return self.flat_level * (hi - lo) / math.pi
        edges = [lo] + self.breakpoints() + [hi]
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = quad(lambda w: float(evaluate_sh(self, w)), a, b, limit=200)
            total += val
        return total / math.pi


def evaluate_sh(bg: GwBackground, omega):
    """S_h(|ω|) in Hz⁻¹; exactly zero outside the band."""
    w = np.abs(np.asarray(omega, dtype=float))
    lo, hi = bg.band
    inside = (w >= lo) & (w <= hi)
    out = np.zeros_like(w)
    if bg.kind is BackgroundKind.FLAT:
        out[inside] = bg.flat_level
    elif bg.kind is BackgroundKind.POWER_LAW:
        breaks = np.array([s[0] for s in bg.segments])
        levels = np.array([s[1] for s in bg.segments])
        expo = np.array([s[2] for s in bg.segments])
        wi = w[inside]
        idx = np.clip(np.searchsorted(breaks, wi, side="right") - 1, 0, len(breaks) - 1)
        out[inside] = levels[idx] * (wi / breaks[idx]) ** expo[idx]
    else:
        out[inside] = _interp_loglog(bg, w[inside])
    if np.ndim(omega) == 0:
        return float(out)
    return out


def _interp_loglog(bg, w):
    tw = np.asarray(bg.table_omega)
    ts = np.asarray(bg.table_sh)
    lw = bg._log_omega
    i = np.clip(np.searchsorted(tw, w, side="right") - 1, 0, tw.size - 2)
    t = (np.log(w) - lw[i]) / (lw[i + 1] - lw[i])
    s0, s1 = ts[i], ts[i + 1]
    pos = (s0 > 0) & (s1 > 0)
    res = (1 - t) * s0 + t * s1
    with np.errstate(divide="ignore"):
        res[pos] = np.exp((1 - t[pos]) * np.log(s0[pos]) + t[pos] * np.log(s1[pos]))
    # nodes are returned verbatim
    at_node = w == tw[i]
    res[at_node] = s0[at_node]
    at_next = w == tw[i + 1]
    res[at_next] = s1[at_next]
    return res


def effective_temperature(bg: GwBackground, omega):
    """Noise temperature T_gw (K) with S_h = (16G/5c⁵) k_B T_gw."""
    return evaluate_sh(bg, omega) / (STRAIN_THERMAL_COEFF * K_B)


def graviton_number(bg: GwBackground, omega):
    """Gravitons per mode, n_gw = k_B T_gw / (ħ|ω|)."""
    w = np.abs(np.asarray(omega, dtype=float))
    if np.any(w == 0):
        raise ZeroDivisionError("graviton number diverges at omega = 0")
    n = evaluate_sh(bg, omega) / (STRAIN_THERMAL_COEFF * HBAR * w)
    return float(n) if np.ndim(omega) == 0 else n


def theta_gw(bg: GwBackground, omega):
    """Noise temperature as a rate, Θ_gw = π k_B T_gw / ħ (s⁻¹)."""
    return math.pi * K_B * effective_temperature(bg, omega) / HBAR


def chh_coefficient(bg: GwBackground, omega):
    """Weight of δ(k²) in the on-shell mode correlation: 10π²c² S_h(ω)/|ω|."""
    w = np.abs(np.asarray(omega, dtype=float))
    return 10 * math.pi**2 * C**2 * evaluate_sh(bg, omega) / w


def mode_variance(bg: GwBackground, omega, d_omega, n_dir):
    """<|a|²> of one discrete mode (per helicity and direction sample).

    Discretising the on-shell correlation over a frequency bin of width
    ``d_omega`` and ``n_dir`` isotropic direction samples gives
    ``S_h Δω/(2π) · 5/(2 n_dir)``; the 5/2 undoes the angular mean
    Σ_γ <|e_1 e_2|²/2> = 2/5 of the polarisation tensors.
    """
    return evaluate_sh(bg, omega) * d_omega / (2 * math.pi) * 5.0 / (2.0 * n_dir)
