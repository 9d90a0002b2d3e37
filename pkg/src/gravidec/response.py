"""Mode dephasing amplitudes and apparatus response functions A(ω).

A mode is a plane gravitational wave of angular frequency ω > 0, direction n
and helicity γ.  The dephasing it induces on a probe moving along a straight
segment with reduced velocity u is

    φ = K₀/(2√2) (e*·u)² ∫ exp(-iω(t - n·x/c)) c dt,

and the response of an instrument is A(ω) = (5/2) Σ_γ ⟨|φ|²⟩_n.
"""
from __future__ import annotations

import csv
import enum
import math
import threading
import warnings
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import _kernels
from .constants import C
from .geometry import APEX_SIGNS, RamanOptics, RhombGeometry
from .kinematics import (DEFAULT_QUADRATURE, HELICITIES, AngularQuadrature, Direction,
                         composite_gauss_legendre, polarization_vector, polarization_vectors,
                         unit_vectors)

SQRT2 = math.sqrt(2.0)

#: |sβ| and |β| below which (1 - e^{isβ})/β switches to its series
SERIES_PHASE = 1e-4
SERIES_BETA = 1e-6

#: ωτ_AB above which the long atomic phase times enter only through their ω-mean
SMOOTH_X = 30.0


class QuadratureWarning(UserWarning):
    """Angular quadrature changed by more than the accepted amount on refinement."""


def f_osc(x):
    """f(x) = 2(1 - cos x), evaluated as 4 sin²(x/2)."""
    return 4.0 * np.sin(0.5 * np.asarray(x, dtype=float)) ** 2


def expm1i(z):
    """exp(iz) - 1 without cancellation for small z."""
    z = np.asarray(z, dtype=float)
    return -2.0 * np.sin(0.5 * z) ** 2 + 1j * np.sin(z)


def _phase_integral(z):
    """(1 - e^{-iz}) / (iz), equal to 1 at z = 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-6
    zs = np.where(small, 1.0, z)
    out = -expm1i(-zs) / (1j * zs)
    series = 1.0 - 0.5j * z - z * z / 6.0
    return np.where(small, series, out)


@dataclass(frozen=True)
class GwProbeMode:
    omega: float
    direction: Direction
    helicity: int = 1

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"mode frequency must be > 0, got {self.omega}")
        if self.helicity not in HELICITIES:
            raise ValueError(f"helicity must be +1 or -1, got {self.helicity}")


# ---------------------------------------------------------------- segments

def segment_amplitude(start, end, u, k0, mode: GwProbeMode, spatial_phase=True):
    """Closed-form line integral of one straight probe segment.

    ``start`` and ``end`` are (t, x) events and ``u`` the reduced wavevector
    of the probe.  With ``spatial_phase=False`` the n·x/c part of the mode
    phase is dropped (non-relativistic probes).
    """
    t0, x0 = start
    t1, x1 = end
    dt = t1 - t0
    if dt == 0:
        return 0j
    d = mode.direction
    n = unit_vectors(d.theta, d.phi)
    ec = np.conj(polarization_vector(d, mode.helicity))
    pol = (ec @ np.asarray(u, dtype=float)) ** 2
    if spatial_phase:
        eta0 = t0 - n @ np.asarray(x0, dtype=float) / C
        kappa = 1.0 - n @ (np.asarray(x1, dtype=float) - np.asarray(x0, dtype=float)) / (C * dt)
    else:
        eta0, kappa = t0, 1.0
    w = mode.omega
    line = C * dt * np.exp(-1j * w * eta0) * _phase_integral(w * kappa * dt)
    return complex(k0 / (2 * SQRT2) * pol * line)


# ---------------------------------------------------------------- atomic

def atomic_amplitude(g: RhombGeometry, mode: GwProbeMode, method="closed", spatial_phase=False):
    """φ_at for one mode.

    ``method="closed"`` uses 2i√2 (Ω_at sin2α/ω) e₁e₃ (1 - cos ωτ) with the
    conjugate-helicity vector; ``method="segments"`` sums the four arms.
    """
    if method == "closed":
        e = polarization_vector(mode.direction, -mode.helicity)
        w = mode.omega
        return complex(2j * SQRT2 * g.omega_at * g.sin2a / w * e[0] * e[2]
                       * 0.5 * f_osc(w * g.tau_ab))
    if method == "segments":
        return sum(sign * segment_amplitude(s, e, u, g.k0, mode, spatial_phase)
                   for _, s, e, u, sign in g.segments())
    raise ValueError(f"unknown method {method!r}")


def atomic_amplitudes(g: RhombGeometry, omega, theta, phi, gamma):
    """Vectorised closed-form φ_at on arrays of (ω, θ, φ) for one helicity."""
    e = polarization_vectors(theta, phi, -gamma)
    w = np.asarray(omega, dtype=float)
    return 2j * SQRT2 * g.omega_at * g.sin2a / w * e[..., 0] * e[..., 2] * 0.5 * f_osc(w * g.tau_ab)


def atomic_response(g: RhombGeometry, omega):
    """A_at(ω) = 4 Ω_at² sin²2α f²(ωτ_AB)/ω², with A_at(0) = 0."""
    w = np.abs(np.asarray(omega, dtype=float))
    zero = w == 0
    ws = np.where(zero, 1.0, w)
    out = 4.0 * (g.omega_at * g.sin2a) ** 2 * f_osc(ws * g.tau_ab) ** 2 / ws**2
    out = np.where(zero, 0.0, out)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------- photonic

def _betas(theta):
    theta = np.asarray(theta, dtype=float)
    return 2.0 * np.cos(0.5 * theta) ** 2, 2.0 * np.sin(0.5 * theta) ** 2


def _q(s, beta):
    """(1 - e^{isβ})/β with the colinear limit handled by a series."""
    y = s * beta
    use_series = (np.abs(y) < SERIES_PHASE) | (np.abs(beta) < SERIES_BETA)
    bs = np.where(use_series, 1.0, beta)
    direct = -expm1i(np.where(use_series, 0.0, y)) / bs
    series = -1j * s * (1.0 + 0.5j * y - y * y / 6.0 - 1j * y**3 / 24.0)
    return np.where(use_series, series, direct)


def psi_small(o: RamanOptics, omega, theta):
    """Beam-splitter amplitude ψ(ω, θ) shared by the four apexes."""
    w = np.asarray(omega, dtype=float)
    bp, bm = _betas(theta)
    a = w * o.tau_mb
    b = w * o.tau_lm
    c = w * (o.tau_lm - o.tau_mb)
    inner = np.exp(1j * a * bp) * _q(b, bm) + _q(a, bp) - _q(c, bm)
    return bp * bm * inner


def psi_small_terms(o: RamanOptics, u):
    """|ψ|² as Σ_k C_k(u) f(ω z_k(u)); returns lists (C_k, z_k) of arrays.

    The same coefficients and arguments build the Min-form T(η).
    """
    u = np.asarray(u, dtype=float)
    bp, bm = 1.0 + u, 1.0 - u
    a, l = o.tau_mb, o.tau_lm
    d = l - a
    c1 = bp * (bp - bm)
    coefs = [c1, c1, c1, -c1, -c1, bp * bp, bm * (bm - bp)]
    args = [d * bm, l * bm, a * bp, d * bm - a * bp, l * bm + a * bp,
            a * (bp + bm), a * bp]
    return coefs, args


#: the same decomposition as polynomial data: C_k(u) = c0 + c1 u + c2 u², z_k(u) = p + r u
def _psi_terms_poly(o: RamanOptics):
    a, l = o.tau_mb, o.tau_lm
    d = l - a
    c1 = (0.0, 2.0, 2.0)
    terms = [
        (1, c1, d, -d),
        (1, c1, l, -l),
        (1, c1, a, a),
        (-1, c1, d - a, -(d + a)),
        (-1, c1, l + a, a - l),
        (1, (1.0, 2.0, 1.0), 2 * a, 0.0),
        (1, (0.0, -2.0, 2.0), a, a),
    ]
    return [((s * c[0], s * c[1], s * c[2]), p, r) for s, c, p, r in terms]


def psi_small_sq_closed(o: RamanOptics, omega, theta):
    """|ψ|² from its expansion in f-functions.

    The terms cancel to O(β₋²) near colinear directions, so the sum is
    carried in extended precision.
    """
    ld = np.longdouble
    w = np.asarray(omega, dtype=ld)
    th = np.asarray(theta, dtype=ld)
    a, l = ld(o.tau_mb), ld(o.tau_lm)
    d = l - a
    bp, bm = 2 * np.cos(th / 2) ** 2, 2 * np.sin(th / 2) ** 2
    c1 = bp * (bp - bm)
    coefs = [c1, c1, c1, -c1, -c1, bp * bp, bm * (bm - bp)]
    args = [d * bm, l * bm, a * bp, d * bm - a * bp, l * bm + a * bp, a * (bp + bm), a * bp]
    out = sum(ck * 4 * np.sin(w * zk / 2) ** 2 for ck, zk in zip(coefs, args))
    return out.astype(float) if np.ndim(out) else float(out)


def phase_times(g: RhombGeometry, theta, phi):
    """η_X = t_X - n·x_X/c at the four apexes."""
    n = unit_vectors(theta, phi)
    return {k: t - n @ x / C for k, (t, x) in g.apexes().items()}


def phase_time_differences(g: RhombGeometry, theta, phi):
    """η_XY = η_Y - η_X computed directly from apex separations."""
    n = unit_vectors(theta, phi)
    ap = g.apexes()
    out = {}
    for pair in ("AB", "AC", "AD", "BC", "BD", "CD"):
        (t0, x0), (t1, x1) = ap[pair[0]], ap[pair[1]]
        out[pair] = (t1 - t0) - n @ (x1 - x0) / C
    return out


def psi_big(g: RhombGeometry, omega, theta, phi):
    """Ψ = e^{-iωη_A} - e^{-iωη_B} - e^{-iωη_C} + e^{-iωη_D}.

    Evaluated as e^{-iωη_A}(1 - e^{-iωη_AB})(1 - e^{-iωη_AC}), which is the
    same sum because η_AD = η_AB + η_AC, and keeps full relative accuracy
    when ωτ_AB ≪ 1.
    """
    w = np.asarray(omega, dtype=float)
    eta = phase_times(g, theta, phi)
    dif = phase_time_differences(g, theta, phi)
    return np.exp(-1j * w * eta["A"]) * expm1i(-w * dif["AB"]) * expm1i(-w * dif["AC"])


def psi_big_direct(g: RhombGeometry, omega, theta, phi):
    """The four-term alternating sum, without refactoring."""
    w = np.asarray(omega, dtype=float)
    eta = phase_times(g, theta, phi)
    return sum(APEX_SIGNS[k] * np.exp(-1j * w * eta[k]) for k in "ABCD")


def _f_combination_mp(w, ab, ac):
    w, ab, ac = mpmath.mpf(w), mpmath.mpf(ab), mpmath.mpf(ac)
    f = {k: 4 * mpmath.sin(w * v / 2) ** 2
         for k, v in {"AB": ab, "AC": ac, "AD": ab + ac, "BC": ac - ab, "BD": ac, "CD": ab}.items()}
    return float(f["AB"] + f["AC"] + f["BD"] + f["CD"] - f["AD"] - f["BC"])


def psi_big_sq_closed(g: RhombGeometry, omega, theta, phi, dps=40):
    """|Ψ|² as the f-combination of the phase-time differences.

    The terms cancel to the size of the result (by (ωτ)² at low frequency and
    far more near the double zeros ωη ≈ 2πk), so the combination is evaluated
    at ``dps`` digits from the float64 inputs.  Reference use only.
    """
    d = phase_time_differences(g, theta, phi)
    # η_BD = η_AC, η_CD = η_AB, η_AD = η_AB + η_AC hold exactly in the sum
    w, ab, ac = np.broadcast_arrays(np.asarray(omega, dtype=float), d["AB"], d["AC"])
    with mpmath.workdps(dps):
        out = np.array([_f_combination_mp(*t) for t in zip(w.ravel(), ab.ravel(), ac.ravel())]).reshape(w.shape)
    return out if out.ndim else float(out)


def photonic_amplitude(g: RhombGeometry, o: RamanOptics, mode: GwProbeMode, method="closed"):
    """φ_phot for one mode.

    ``"closed"`` is (iΩ_phot/(2√2ω)) ψ Ψ; ``"legs"`` sums the straight photon
    legs L→M, M→atom, L'→atom at every apex with the apex signs A+ B- C- D+.
    """
    d = mode.direction
    if method == "closed":
        w = mode.omega
        return complex(1j * o.omega_phot / (2 * SQRT2 * w)
                       * psi_small(o, w, d.theta) * psi_big(g, w, d.theta, d.phi))
    if method == "legs":
        # legs are integrated in apex-local coordinates: nanosecond durations
        # would lose ~8 digits if subtracted from second-scale apex times
        local = sum(sign * segment_amplitude(s, e, u, o.k0, mode, True)
                    for _, s, e, u, sign in o.legs(0.0, np.zeros(3)))
        return complex(local * psi_big_direct(g, mode.omega, d.theta, d.phi))
    raise ValueError(f"unknown method {method!r}")


def _photonic_mean_gl(g, o, w, q):
    """⟨|ψ|²|Ψ|²⟩ on a Gauss-Legendre product rule for an array of ω."""
    u, wu = q.cos_rule()
    phi, wphi = q.phi_rule()
    theta = np.arccos(u)
    b = g.beta
    psi_sq = np.abs(psi_small(o, w[:, None], theta[None, :])) ** 2
    big = _kernels.psi_big_sq_phi_mean(w, u, np.cos(phi), wphi, g.tau_ab,
                                       b * math.sin(g.alpha), b * math.cos(g.alpha))
    return (psi_sq * big) @ wu


def _photonic_mean_nodes(g, o, w, q):
    th, ph, wt = q.nodes()
    psi_sq = np.abs(psi_small(o, w[:, None], th[None, :])) ** 2
    big = np.abs(psi_big(g, w[:, None], th[None, :], ph[None, :])) ** 2
    return (psi_sq * big) @ wt


def _photonic_eval(g, o, w, q):
    w = np.atleast_1d(np.abs(np.asarray(w, dtype=float)))
    out = np.zeros_like(w)
    nz = w > 0
    if np.any(nz):
        wn = w[nz]
        mean = (_photonic_mean_gl if q.kind == "gauss-legendre" else _photonic_mean_nodes)(g, o, wn, q)
        out[nz] = o.omega_phot**2 / (4 * wn**2) * 2.5 * mean
    return out


def photonic_response(g: RhombGeometry, o: RamanOptics, omega, q: AngularQuadrature = DEFAULT_QUADRATURE,
                      check=False, rel_tol=1e-6):
    """A_phot(ω) = (Ω_phot²/4ω²)(5/2)⟨|ψ|²|Ψ|²⟩_n by angular quadrature.

    The two helicities contribute identically.  With ``check=True`` the
    quadrature is repeated with doubled node counts and a
    :class:`QuadratureWarning` is emitted if the two disagree by more than
    ``rel_tol``.
    """
    scalar = np.ndim(omega) == 0
    out = _photonic_eval(g, o, omega, q)
    if check:
        ref = _photonic_eval(g, o, omega, q.refined())
        scale = np.maximum(np.abs(ref), np.finfo(float).tiny)
        worst = float(np.max(np.abs(out - ref) / scale)) if out.size else 0.0
        if worst > rel_tol:
            warnings.warn(f"photonic angular quadrature changed by {worst:.2e} on refinement",
                          QuadratureWarning, stacklevel=2)
    return float(out[0]) if scalar else out


# ------------------------------------------------- ω-smoothed photonic form

def _cos_poly_integral(c, p, r, w, n_gl=24, switch=20.0):
    """∫_{-1}^{1} (c0 + c1 u + c2 u²) cos(ω(p + r u)) du for an array of ω."""
    w = np.asarray(w, dtype=float)
    b = w * r
    out = np.empty_like(w)
    small = np.abs(b) < switch
    if np.any(small):
        x, wx = np.polynomial.legendre.leggauss(n_gl)
        poly = c[0] + c[1] * x + c[2] * x * x
        out[small] = np.cos(w[small, None] * (p + r * x[None, :])) @ (wx * poly)
    big = ~small
    if np.any(big):
        bb = b[big]
        wb = w[big]

        def prim(uu):
            th = wb * (p + r * uu)
            P = c[0] + c[1] * uu + c[2] * uu * uu
            dP = c[1] + 2 * c[2] * uu
            d2P = 2 * c[2]
            return P * np.sin(th) / bb + dP * np.cos(th) / bb**2 - d2P * np.sin(th) / bb**3

        out[big] = prim(1.0) - prim(-1.0)
    return out


def _poly_integral(c):
    return 2 * c[0] + 2 * c[2] / 3.0


def _f_poly_integral(c, p, r, w, e=None, n_gl=24, switch=20.0):
    """∫_{-1}^{1} C(u) f(ω(p + r u)) [f(ω e u)] du for an array of ω.

    Slowly varying arguments are integrated in the sin² form, which keeps
    full relative accuracy when ωτ ≪ 1; fast ones through the cosine
    antiderivatives, where no cancellation occurs.
    """
    w = np.asarray(w, dtype=float)
    slope = np.abs(w * r) if e is None else np.maximum(np.abs(w * r), np.abs(w * e))
    out = np.empty_like(w)
    small = slope < switch
    if np.any(small):
        x, wx = np.polynomial.legendre.leggauss(n_gl)
        poly = c[0] + c[1] * x + c[2] * x * x
        ws = w[small, None]
        val = 4 * np.sin(0.5 * ws * (p + r * x[None, :])) ** 2
        if e is not None:
            val = val * 4 * np.sin(0.5 * ws * e * x[None, :]) ** 2
        out[small] = val @ (wx * poly)
    big = ~small
    if np.any(big):
        wb = w[big]
        ci = _poly_integral(c)
        if e is None:
            out[big] = 2 * ci - 2 * _cos_poly_integral(c, p, r, wb)
        elif r == 0.0:
            out[big] = f_osc(wb * p) * _f_poly_integral(c, 0.0, e, wb)
        else:
            out[big] = (4 * ci - 4 * _cos_poly_integral(c, 0.0, e, wb) - 4 * _cos_poly_integral(c, p, r, wb)
                        + 2 * _cos_poly_integral(c, p, r + e, wb) + 2 * _cos_poly_integral(c, p, r - e, wb))
    return out


def photonic_smoothed_mean(g: RhombGeometry, o: RamanOptics, omega):
    """ω-local mean of ⟨|ψ|²|Ψ|²⟩ for ωτ_AB ≫ 1.

    Writing |Ψ|² = f(ωη_AB) f(ωη_AC) = 2f(ωη_AB) + 2f(ωη_AC) - f(ωη_AD) - f(ωη_BC),
    the three long phase times η_AB, η_AC, η_AD ≈ τ_AB give terms oscillating
    in ω with period ~1/τ_AB; they are replaced by their mean 2, leaving
    6 - f(ωη_BC).  The short η_BC = 2τ_AB (v/c) sinα cosθ and all of |ψ|² are
    kept exactly, and the cosθ integral is done term by term.
    """
    w = np.atleast_1d(np.abs(np.asarray(omega, dtype=float)))
    e = 2 * g.tau_ab * g.beta * math.sin(g.alpha)   # η_BC = e·u
    total = np.zeros_like(w)
    for c, p, r in _psi_terms_poly(o):
        if p == 0.0 and r == 0.0:
            continue
        total += 6 * _f_poly_integral(c, p, r, w)
        if e != 0.0:
            total -= _f_poly_integral(c, p, r, w, e)
    return 0.5 * total


def photonic_smoothed_response(g, o, omega):
    w = np.atleast_1d(np.abs(np.asarray(omega, dtype=float)))
    out = o.omega_phot**2 / (4 * w**2) * 2.5 * photonic_smoothed_mean(g, o, w)
    return float(out[0]) if np.ndim(omega) == 0 else out


def photonic_tail_coefficient(o: RamanOptics):
    """lim ω² A_phot averaged over ω: (5Ω²/8)·4·Σ_k ∫C_k du (zero terms dropped)."""
    s = sum(_poly_integral(c) for c, p, r in _psi_terms_poly(o) if not (p == 0.0 and r == 0.0))
    return 5.0 * o.omega_phot**2 / 8.0 * 4.0 * s


# ---------------------------------------------------------------- combined

def combined_response(g: RhombGeometry, o: RamanOptics, omega, q: AngularQuadrature = DEFAULT_QUADRATURE,
                      exact=False):
    """A_at + A_phot, or with ``exact=True`` (5/2)Σ_γ⟨|φ_at + φ_phot|²⟩_n."""
    if not exact:
        return atomic_response(g, omega) + photonic_response(g, o, omega, q)
    scalar = np.ndim(omega) == 0
    w = np.atleast_1d(np.abs(np.asarray(omega, dtype=float)))
    out = np.zeros_like(w)
    nz = w > 0
    if np.any(nz):
        out[nz] = _combined_exact_parts(g, o, w[nz], q)[0]
    return float(out[0]) if scalar else out


def _combined_exact_parts(g, o, w, q):
    """(total, atomic, photonic, cross) for an array of ω > 0."""
    th, ph, wt = q.nodes()
    W, TH, PH = w[:, None], th[None, :], ph[None, :]
    phot = (1j * o.omega_phot / (2 * SQRT2 * W)) * psi_small(o, W, TH) * psi_big(g, W, TH, PH)
    tot = at = ph_ = 0.0
    for gam in HELICITIES:
        a = atomic_amplitudes(g, W, TH, PH, gam)
        # the photonic polarisation factor sin²θ is helicity independent
        tot = tot + np.abs(a + phot) ** 2 @ wt
        at = at + np.abs(a) ** 2 @ wt
        ph_ = ph_ + np.abs(phot) ** 2 @ wt
    tot, at, ph_ = 2.5 * tot, 2.5 * at, 2.5 * ph_
    return tot, at, ph_, tot - at - ph_


# ---------------------------------------------------------------- apparatus

class ResponseKind(str, enum.Enum):
    ATOMIC = "atomic"
    PHOTONIC = "photonic"
    COMBINED_SUM = "combined"
    COMBINED_EXACT = "combined-exact"


@dataclass
class ApparatusResponse:
    """A(ω) together with the hints the variance integrator needs.

    Call the object for the pointwise response.  :meth:`integrand` may
    replace oscillations on the scale 1/τ_AB by their ω-mean above
    ``smooth_start``; beyond ``tail_start`` the integrator uses
    A ≈ ``tail_coefficient``/ω².
    """

    kind: ResponseKind
    geometry: RhombGeometry
    optics: RamanOptics | None = None
    quadrature: AngularQuadrature = DEFAULT_QUADRATURE
    components: tuple = ()
    memoize: bool = True
    _memo: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if self.kind in (ResponseKind.PHOTONIC, ResponseKind.COMBINED_SUM,
                         ResponseKind.COMBINED_EXACT) and self.optics is None:
            raise ValueError(f"{self.kind.value} response needs Raman optics")

    # pointwise value ---------------------------------------------------
    def __call__(self, omega):
        return self.evaluate(omega)

    def evaluate(self, omega):
        g, o, q = self.geometry, self.optics, self.quadrature
        if self.kind is ResponseKind.ATOMIC:
            return atomic_response(g, omega)
        if self.kind is ResponseKind.PHOTONIC:
            return photonic_response(g, o, omega, q)
        if self.kind is ResponseKind.COMBINED_SUM:
            return combined_response(g, o, omega, q)
        return combined_response(g, o, omega, q, exact=True)

    # integrator hooks --------------------------------------------------
    @property
    def smooth_start(self):
        if self.kind is ResponseKind.PHOTONIC and self.geometry.tau_ab > 0:
            return SMOOTH_X / self.geometry.tau_ab
        return math.inf

    @property
    def tail_start(self):
        g, o = self.geometry, self.optics
        if self.kind is ResponseKind.ATOMIC:
            return 2000.0 / g.tau_ab if g.tau_ab > 0 else math.inf
        if self.kind is ResponseKind.PHOTONIC:
            return 3000.0 / min(o.tau_mb, o.tau_lm)
        return math.inf

    @property
    def tail_coefficient(self):
        g = self.geometry
        if self.kind is ResponseKind.ATOMIC:
            return 24.0 * (g.omega_at * g.sin2a) ** 2
        if self.kind is ResponseKind.PHOTONIC:
            return photonic_tail_coefficient(self.optics) if g.tau_ab > 0 else 0.0
        return None

    @property
    def tail_harmonics(self):
        """(coefficient, frequency) pairs with ω²A = Σ c cos(kω) beyond ``tail_start``."""
        g = self.geometry
        if self.kind is ResponseKind.ATOMIC:
            # f² = 6 - 8cos x + 2cos 2x
            k = 4.0 * (g.omega_at * g.sin2a) ** 2
            return ((6 * k, 0.0), (-8 * k, g.tau_ab), (2 * k, 2 * g.tau_ab))
        c = self.tail_coefficient
        return () if c is None else ((c, 0.0),)

    def breakpoints(self):
        s = self.smooth_start
        return [s] if math.isfinite(s) else []

    def panel_width(self, omega):
        """Largest ω-panel that still resolves the local oscillations."""
        g, o = self.geometry, self.optics
        slow = math.pi / (4 * g.tau_ab) if g.tau_ab > 0 else math.inf
        if self.kind is ResponseKind.ATOMIC:
            return slow
        zmax = 2.0 * (o.tau_lm + o.tau_mb) + 2 * g.tau_ab * g.beta
        fast = math.pi / (4 * zmax)
        if self.kind is ResponseKind.PHOTONIC and omega >= self.smooth_start:
            # the smoothed integrand is a sum of a few sinusoids: half periods suffice
            return 4 * fast
        return min(slow, fast)

    def integrand(self, omega):
        """A(ω) as used inside the variance integral (ω-smoothed where valid)."""
        w = np.asarray(omega, dtype=float)
        if self.kind is ResponseKind.PHOTONIC and math.isfinite(self.smooth_start):
            out = np.empty_like(w)
            hi = w >= self.smooth_start
            if np.any(hi):
                out[hi] = photonic_smoothed_response(self.geometry, self.optics, w[hi])
            if np.any(~hi):
                out[~hi] = self._memo_eval(w[~hi])
            return out
        return self._memo_eval(w)

    def _memo_eval(self, w):
        if not self.memoize or self.kind is ResponseKind.ATOMIC:
            return np.asarray(self.evaluate(w), dtype=float)
        with self._lock:
            keys = [x.tobytes() for x in np.atleast_1d(w)]
            missing = [i for i, k in enumerate(keys) if k not in self._memo]
        if missing:
            vals = np.atleast_1d(self.evaluate(np.atleast_1d(w)[missing]))
            with self._lock:
                for i, v in zip(missing, vals):
                    self._memo[keys[i]] = float(v)
        with self._lock:
            res = np.array([self._memo[k] for k in keys])
        return res.reshape(np.shape(w))


def atomic_apparatus(g: RhombGeometry) -> ApparatusResponse:
    return ApparatusResponse(ResponseKind.ATOMIC, g)


def photonic_apparatus(g, o, q: AngularQuadrature = DEFAULT_QUADRATURE) -> ApparatusResponse:
    return ApparatusResponse(ResponseKind.PHOTONIC, g, o, q)


def combined_apparatus(g, o, q: AngularQuadrature = DEFAULT_QUADRATURE, exact=False) -> ApparatusResponse:
    if exact:
        return ApparatusResponse(ResponseKind.COMBINED_EXACT, g, o, q)
    return ApparatusResponse(ResponseKind.COMBINED_SUM, g, o, q,
                             components=(atomic_apparatus(g), photonic_apparatus(g, o, q)))


def write_response_csv(path, g, o, omegas, q: AngularQuadrature = DEFAULT_QUADRATURE):
    """Tabulate (omega_rad_s, A_atomic, A_photonic, A_combined) to CSV."""
    w = np.asarray(omegas, dtype=float)
    a_at = np.atleast_1d(atomic_response(g, w))
    a_ph = np.atleast_1d(photonic_response(g, o, w, q)) if o is not None else np.zeros_like(w)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["omega_rad_s", "A_atomic", "A_photonic", "A_combined"])
        for row in zip(w, a_at, a_ph, a_at + a_ph):
            wr.writerow([repr(float(v)) for v in row])
