"""Dephasing variance, fringe visibility and the flat-spectrum closed forms.

The variance of the high-pass filtered dephasing is

    ΔΦ² = ∫ dω/2π S_h(ω) A(ω) ω²/(ω² + Γ²)   (over all real ω)
        = (1/π) ∫_0^∞ S_h A ω²/(ω² + Γ²) dω,

computed by adaptive Gauss-Kronrod panels plus an analytic tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import sici

from .constants import C
from .geometry import RamanOptics, RhombGeometry
from .gw_background import BackgroundKind, GwBackground, evaluate_sh
from .kinematics import AngularQuadrature, angular_average
from .response import (ApparatusResponse, ResponseKind, _combined_exact_parts, f_osc,
                       phase_time_differences, psi_small_terms)

# Kronrod 15-point rule with its embedded 7-point Gauss rule
_XK = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                0.207784955007898467600689403773245, 0.0])
_WK = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
KRONROD_X = np.concatenate([-_XK[:-1], [0.0], _XK[:-1][::-1]])
KRONROD_W = np.concatenate([_WK[:-1], [_WK[-1]], _WK[:-1][::-1]])
GAUSS_W = np.zeros(15)
GAUSS_W[1:14:2] = np.concatenate([_WG[:-1], [_WG[-1]], _WG[:-1][::-1]])


class ConvergenceError(RuntimeError):
    """Adaptive integration stopped before reaching the requested tolerance."""

    def __init__(self, message, estimate, error):
        super().__init__(f"{message} (estimate {estimate!r}, error {error!r})")
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class DetectionFilter:
    """Lorentzian high-pass δΦ(ω) = (-iω/(Γ - iω)) Φ(ω), Γ = 1/τ_av."""

    gamma: float
    kind: str = "lorentzian-highpass"

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"filter rate must be > 0, got {self.gamma}")
        if self.kind != "lorentzian-highpass":
            raise ValueError(f"unsupported filter kind {self.kind!r}")

    @classmethod
    def from_tau_av(cls, tau_av):
        return cls(1.0 / float(tau_av))

    def transfer(self, omega):
        w = np.asarray(omega, dtype=float)
        return -1j * w / (self.gamma - 1j * w)

    def power(self, omega):
        """|transfer|² = ω²/(ω² + Γ²)."""
        w = np.asarray(omega, dtype=float)
        return w * w / (w * w + self.gamma**2)


@dataclass(frozen=True)
class IntegratorOptions:
    tol: float = 1e-6
    abs_tol: float = 0.0
    max_panels: int = 400_000
    log_ratio: float = 2.0


@dataclass(frozen=True)
class IntegralResult:
    value: np.ndarray | float
    error: float
    panels: int
    evaluations: int


@dataclass(frozen=True)
class DecoherenceResult:
    variance: float
    visibility: float
    breakdown: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @classmethod
    def from_variance(cls, variance, breakdown=None, diagnostics=None):
        variance = float(variance)
        return cls(variance, visibility(max(variance, 0.0)), dict(breakdown or {}), dict(diagnostics or {}))


def visibility(variance):
    """Fringe visibility exp(-ΔΦ²/2) of Gaussian phase noise."""
    v = np.asarray(variance, dtype=float)
    if np.any(v < 0):
        raise ValueError("variance must be >= 0")
    out = np.exp(-0.5 * v)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------- integrator

def _initial_panels(edges, width_fn, ratio, max_panels=math.inf):
    a_list, b_list = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x = a
        while x < b:
            if len(a_list) >= max_panels:
                raise ConvergenceError("initial panel count exceeds max_panels", math.nan, math.inf)
            w = width_fn(x) if x == 0 else min(x * (ratio - 1.0), width_fn(x))
            nxt = x + w
            if nxt >= b or (b - nxt) < 0.25 * w:
                nxt = b
            a_list.append(x)
            b_list.append(nxt)
            x = nxt
    return np.array(a_list), np.array(b_list)


def _gk15(func, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[:, None] + half[:, None] * KRONROD_X[None, :]
    vals = np.asarray(func(nodes.ravel()), dtype=float)
    vec = vals.ndim == 2
    vals = vals.reshape((-1,) + nodes.shape) if vec else vals.reshape((1,) + nodes.shape)
    k = half[None, :] * (vals @ KRONROD_W)
    g = half[None, :] * (vals @ GAUSS_W)
    lead = vals[0]
    mean = (lead @ KRONROD_W) / 2.0
    resasc = np.abs(half) * (np.abs(lead - mean[:, None]) @ KRONROD_W)
    diff = np.abs(k[0] - g[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        err = np.where(resasc > 0, resasc * np.minimum(1.0, (200.0 * diff / resasc) ** 1.5), diff)
    return k, err, nodes.size


def spectral_integral(func, lo, hi, *, breakpoints=(), panel_width=None, tol=1e-6, abs_tol=0.0,
                      max_panels=400_000, log_ratio=2.0):
    """Adaptive ∫_lo^hi func(ω) dω on geometrically then linearly growing panels.

    ``func`` maps a 1-D array of ω to values (or to an (m, N) array for
    vector integrands; convergence is judged on the first row).
    ``panel_width(ω)`` caps the panel size near ω so that oscillations are
    resolved from the start.  Raises :class:`ConvergenceError` if
    ``max_panels`` is exceeded.
    """
    if not hi > lo:
        return IntegralResult(0.0, 0.0, 0, 0)
    pw = panel_width or (lambda x: math.inf)
    edges = sorted({float(lo), float(hi), *(float(p) for p in breakpoints if lo < p < hi)})
    a, b = _initial_panels(edges, lambda x: max(pw(x), 1e-300), log_ratio, max_panels)
    vals, err, nev = _gk15(func, a, b)
    while True:
        total = vals.sum(axis=1)
        errsum = float(err.sum())
        target = max(tol * abs(total[0]), abs_tol)
        if errsum <= target or not np.isfinite(errsum):
            break
        order = np.argsort(err)[::-1]
        csum = np.cumsum(err[order])
        nsplit = int(np.searchsorted(csum, errsum - 0.5 * target)) + 1
        pick = order[:max(1, nsplit)]
        if a.size + pick.size > max_panels:
            raise ConvergenceError("adaptive refinement exceeded max_panels", float(total[0]), errsum)
        mid = 0.5 * (a[pick] + b[pick])
        na = np.concatenate([a[pick], mid])
        nb = np.concatenate([mid, b[pick]])
        nv, ne, n = _gk15(func, na, nb)
        nev += n
        keep = np.ones(a.size, dtype=bool)
        keep[pick] = False
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        vals = np.concatenate([vals[:, keep], nv], axis=1)
        err = np.concatenate([err[keep], ne])
    total = vals.sum(axis=1)
    value = float(total[0]) if total.size == 1 else total
    return IntegralResult(value, float(err.sum()), int(a.size), int(nev))


def _cos_over_w2_tail(k, a):
    """∫_a^∞ cos(kω)/ω² dω."""
    if k == 0:
        return 1.0 / a
    si, _ = sici(k * a)
    return math.cos(k * a) / a - k * (0.5 * math.pi - si)


def _lorentz_tail(bg: GwBackground, gamma, start, hi, k=0.0):
    """∫_start^hi S_h(ω) cos(kω)/(ω² + Γ²) dω."""
    if not hi > start:
        return 0.0
    if bg.kind is BackgroundKind.FLAT:
        if k == 0:
            if gamma == 0:
                return bg.flat_level * (1.0 / start - (0.0 if math.isinf(hi) else 1.0 / hi))
            if math.isinf(hi):
                return bg.flat_level * math.atan(gamma / start) / gamma
            return bg.flat_level * math.atan((hi - start) * gamma / (gamma**2 + hi * start)) / gamma
        if gamma == 0:
            upper = 0.0 if math.isinf(hi) else _cos_over_w2_tail(k, hi)
            return bg.flat_level * (_cos_over_w2_tail(k, start) - upper)
        v, _ = quad(lambda x: 1.0 / (x * x + gamma**2), start, hi, weight="cos", wvar=k, limit=400)
        return bg.flat_level * v
    pts = [start] + [p for p in bg.breakpoints() if start < p < hi] + [hi]
    total = 0.0
    for p, q in zip(pts[:-1], pts[1:]):
        def fn(x):
            return float(evaluate_sh(bg, x)) / (x * x + gamma**2)
        if k == 0:
            v, _ = quad(fn, p, q, limit=400)
        else:
            v, _ = quad(fn, p, q, weight="cos", wvar=k, limit=400)
        total += v
    return total


def _filter_power(flt, w):
    if flt is None:
        return 1.0
    return flt.power(w)


def _variance_single(bg, A: ApparatusResponse, flt, opts: IntegratorOptions):
    lo, hi = bg.band
    gamma = 0.0 if flt is None else flt.gamma
    ts = A.tail_start
    top = min(hi, ts)

    def integrand(w):
        return evaluate_sh(bg, w) * A.integrand(w) * _filter_power(flt, w)

    bps = list(bg.breakpoints()) + A.breakpoints() + ([gamma] if gamma > 0 else [])
    res = spectral_integral(integrand, lo, top, breakpoints=bps, panel_width=A.panel_width,
                            tol=opts.tol, abs_tol=opts.abs_tol, max_panels=opts.max_panels,
                            log_ratio=opts.log_ratio)
    tail = 0.0
    if hi > ts:
        tail = sum(c * _lorentz_tail(bg, gamma, ts, hi, k) for c, k in A.tail_harmonics)
    value = (res.value + tail) / math.pi
    diag = {"panels": res.panels, "evaluations": res.evaluations, "error": res.error / math.pi,
            "tail": tail / math.pi, "tail_start": ts if hi > ts else None}
    return value, diag


def variance_integral(bg: GwBackground, A: ApparatusResponse, flt: DetectionFilter | None = None,
                      opts: IntegratorOptions | None = None) -> DecoherenceResult:
    """ΔΦ² and V for a background, an apparatus response and a filter.

    ``flt=None`` integrates without the high-pass factor.  Combined
    responses report the atomic and photonic parts separately; the exact
    combined mode also reports the interference (cross) term.
    """
    opts = opts or IntegratorOptions()
    if bg.kind is BackgroundKind.FLAT and bg.flat_level == 0.0 or \
            bg.kind is BackgroundKind.POWER_LAW and all(s[1] == 0 for s in bg.segments) or \
            bg.kind is BackgroundKind.TABULATED and not any(bg.table_sh):
        parts = {"atomic": 0.0, "photonic": 0.0, "cross": None}
        return DecoherenceResult.from_variance(0.0, parts, {"panels": 0, "evaluations": 0, "error": 0.0})
    if A.kind is ResponseKind.COMBINED_SUM:
        at, d_at = _variance_single(bg, A.components[0], flt, opts)
        ph, d_ph = _variance_single(bg, A.components[1], flt, opts)
        diag = {"panels": d_at["panels"] + d_ph["panels"],
                "evaluations": d_at["evaluations"] + d_ph["evaluations"],
                "error": d_at["error"] + d_ph["error"], "tail": d_at["tail"] + d_ph["tail"]}
        return DecoherenceResult.from_variance(at + ph, {"atomic": at, "photonic": ph, "cross": None}, diag)
    if A.kind is ResponseKind.COMBINED_EXACT:
        return _variance_exact(bg, A, flt, opts)
    value, diag = _variance_single(bg, A, flt, opts)
    key = "atomic" if A.kind is ResponseKind.ATOMIC else "photonic"
    other = "photonic" if key == "atomic" else "atomic"
    return DecoherenceResult.from_variance(value, {key: value, other: 0.0, "cross": None}, diag)


def _variance_exact(bg, A, flt, opts):
    lo, hi = bg.band
    g = A.geometry
    limit = 30.0 / g.tau_ab if g.tau_ab > 0 else math.inf
    if hi > limit:
        raise ValueError(f"exact combined mode needs the band to end below {limit:.3g} rad/s")
    gamma = 0.0 if flt is None else flt.gamma

    def integrand(w):
        tot, at, ph, _ = _combined_exact_parts(g, A.optics, w, A.quadrature)
        wt = evaluate_sh(bg, w) * _filter_power(flt, w)
        return np.vstack([tot * wt, at * wt, ph * wt])

    photon = ApparatusResponse(ResponseKind.PHOTONIC, g, A.optics, A.quadrature)
    bps = list(bg.breakpoints()) + ([gamma] if gamma > 0 else [])
    res = spectral_integral(integrand, lo, hi, breakpoints=bps, panel_width=photon.panel_width,
                            tol=opts.tol, abs_tol=opts.abs_tol, max_panels=opts.max_panels,
                            log_ratio=opts.log_ratio)
    tot, at, ph = (np.asarray(res.value) / math.pi).tolist()
    diag = {"panels": res.panels, "evaluations": res.evaluations, "error": res.error / math.pi, "tail": 0.0}
    return DecoherenceResult.from_variance(tot, {"atomic": at, "photonic": ph, "cross": tot - at - ph}, diag)


# ---------------------------------------------------------------- f-integrals

def _f_over_w2_tail(a, w):
    """∫_w^∞ f(aω)/ω² dω (sine/cosine integrals)."""
    a = abs(a)
    if a == 0:
        return 0.0
    si, _ = sici(a * w)
    cos_part = math.cos(a * w) / w - a * (0.5 * math.pi - si)
    return 2.0 / w - 2.0 * cos_part


def f_filtered_integral(tau, gamma, tol=1e-10):
    """∫ dω/2π f(ωτ)/(ω² + Γ²) over all real ω, computed numerically.

    Closed form: (1 - e^{-Γ|τ|})/Γ, or |τ| at Γ = 0.
    """
    tau = abs(float(tau))
    if tau == 0:
        return 0.0
    top = max(2000.0 / tau, 1000.0 * gamma)
    res = spectral_integral(lambda w: f_osc(w * tau) / (w * w + gamma**2), 0.0, top,
                            breakpoints=[gamma] if gamma > 0 else [],
                            panel_width=lambda w: math.pi / (4 * tau), tol=tol)
    # the 1/ω² tail is exact; the neglected Γ² correction is below 4Γ²/(3 top³)
    return (res.value + _f_over_w2_tail(tau, top)) / math.pi


def min_integral(eta, tau, tol=1e-10):
    """∫ dω/4π f(ωη) f(ωτ)/ω² over all real ω; closed form Min(|η|, |τ|)."""
    eta, tau = abs(float(eta)), abs(float(tau))
    if min(eta, tau) == 0:
        return 0.0
    top = 200.0 / min(eta, tau)
    res = spectral_integral(lambda w: f_osc(w * eta) * f_osc(w * tau) / (w * w), 0.0, top,
                            panel_width=lambda w: math.pi / (4 * (eta + tau)), tol=tol)
    # f(x)f(y) = 2f(x) + 2f(y) - f(x+y) - f(x-y) turns the tail into single-f pieces
    tail = (2 * _f_over_w2_tail(eta, top) + 2 * _f_over_w2_tail(tau, top)
            - _f_over_w2_tail(eta + tau, top) - _f_over_w2_tail(eta - tau, top))
    return (res.value + tail) / (2 * math.pi)


# ---------------------------------------------------------------- closed forms

def _atomic_bracket_over_gamma(tau, gamma):
    """(3 - 4e^{-Γτ} + e^{-2Γτ})/Γ, equal to 2τ at Γ = 0."""
    if gamma == 0:
        return 2.0 * tau
    return (-4.0 * math.expm1(-gamma * tau) + math.expm1(-2.0 * gamma * tau)) / gamma


def flat_atomic_variance(g: RhombGeometry, s_h, gamma):
    """ΔΦ_at² for flat S_h with the exact Γ dependence.

    ΔΦ²/2 = 2 S_h Ω_at² sin²2α (3 - 4e^{-Γτ_AB} + e^{-2Γτ_AB})/(πΓ).
    """
    if s_h < 0 or gamma < 0:
        raise ValueError("s_h and gamma must be >= 0")
    half = 2.0 * s_h * (g.omega_at * g.sin2a) ** 2 * _atomic_bracket_over_gamma(g.tau_ab, gamma) / math.pi
    return 2.0 * half


def flat_atomic_variance_limit(g: RhombGeometry, s_h):
    """Γτ_AB → 0 limit: ΔΦ²/2 = (4/π) Ω_at² sin²2α S_h τ_AB."""
    return 2.0 * 4.0 / math.pi * (g.omega_at * g.sin2a) ** 2 * s_h * g.tau_ab


def t_of_eta(eta, o: RamanOptics, theta, exact=True):
    """Auxiliary time T(η): the Min-form image of the |ψ|² expansion.

    With ``exact=False`` the |η| → ∞ form is returned.
    """
    u = np.cos(np.asarray(theta, dtype=float))
    if exact:
        e = np.abs(np.asarray(eta, dtype=float))
        coefs, args = psi_small_terms(o, u)
        return sum(c * np.minimum(e, np.abs(z)) for c, z in zip(coefs, args))
    bp, bm = 1.0 + u, 1.0 - u
    d = o.tau_lm - o.tau_mb
    return (bp * (bp - bm) * (abs(d) * bm - np.abs(d * bm - o.tau_mb * bp))
            + bp * (bp * bp + bm * bm) * o.tau_mb)


def y_of_x(x):
    """τ_phot/τ_MB as a function of x = τ_LM/τ_MB."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"x must be > 0, got {x}")
    if x <= 1.0:
        return 5 * math.pi / 12
    return 2.5 * math.pi * (0.5 - (3 * x * x - 3 * x + 1) / (3 * x**3))


def _t_tilde(x, u):
    bp, bm = 1.0 + u, 1.0 - u
    return bp * (bp - bm) * (abs(x - 1) * bm - np.abs(x * bm - 2)) + bp * (bp * bp + bm * bm)


def y_quadrature(x, n=32):
    """y = (5π/16)⟨T̃⟩_n by angular quadrature (kink at cosθ = 1 - 2/x)."""
    x = float(x)
    brk = (1.0 - 2.0 / x,) if x > 1.0 else ()
    q = AngularQuadrature(n_theta=n, n_phi=1, u_breaks=brk)
    return 5 * math.pi / 16 * angular_average(lambda th, ph: _t_tilde(x, np.cos(th)), q)


def flat_photonic_variance(g: RhombGeometry, o: RamanOptics, s_h):
    """ΔΦ_phot² with ΔΦ²/2 = (4/π) Ω_phot² S_h y(τ_LM/τ_MB) τ_MB."""
    if s_h < 0:
        raise ValueError("s_h must be >= 0")
    return 2.0 * 4.0 / math.pi * o.omega_phot**2 * s_h * y_of_x(o.x) * o.tau_mb


def _min_form_breaks(g, o):
    """cosθ values where some Min(|η_BC|, |z_k|) or |z_k| has a kink."""
    e = 2 * g.tau_ab * g.beta * math.sin(g.alpha)
    a, l = o.tau_mb, o.tau_lm
    d = l - a
    lin = [(d, -d), (l, -l), (a, a), (d - a, -(d + a)), (l + a, a - l), (2 * a, 0.0)]
    pts = set()
    for p, r in lin:
        if r != 0:
            pts.add(-p / r)
        for s in (1.0, -1.0):
            if s * e - r != 0:
                pts.add(p / (s * e - r))
    return tuple(sorted(v for v in pts if -1.0 + 1e-12 < v < 1.0 - 1e-12))


def flat_photonic_variance_min_form(g: RhombGeometry, o: RamanOptics, s_h, n_theta=24, n_phi=16):
    """Exact flat-spectrum, unfiltered photonic variance.

    ΔΦ² = (5/4) Ω_phot² S_h ⟨2T(η_AB) + 2T(η_AC) - T(η_AD) - T(η_BC)⟩_n
    with the Min-form T, i.e. without assuming |η| ≫ the photonic times.
    """
    q = AngularQuadrature(n_theta=n_theta, n_phi=n_phi, u_breaks=_min_form_breaks(g, o))

    def integrand(th, ph):
        e = phase_time_differences(g, th, ph)
        return (2 * t_of_eta(e["AB"], o, th) + 2 * t_of_eta(e["AC"], o, th)
                - t_of_eta(e["AD"], o, th) - t_of_eta(e["BC"], o, th))

    return 1.25 * o.omega_phot**2 * s_h * angular_average(integrand, q)


def equivalent_mirror_noise(s_h, tau):
    """Mirror position noise S_q = S_h (cτ)², in m²/Hz."""
    if not tau > 0:
        raise ValueError("tau must be > 0")
    return s_h * (C * tau) ** 2
