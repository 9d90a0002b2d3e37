"""Time-domain Monte Carlo check of the spectral variance.

A realisation is a finite sum of plane waves

    h_ij(t, x) = Σ_m a_m ε_ij,m exp(-iω_m (t - n_m·x/c)) + c.c.,   ε_ij = conj(e_i e_j)/√2,

with independent circular complex Gaussian amplitudes.  The frequency band is
cut into bins; each realisation draws one uniform frequency inside every bin
and ``n_dir`` isotropic directions per bin and helicity.  The per-mode
variance S_h Δω/(2π) · 5/(2 n_dir) makes ⟨h_12²⟩ equal ∫_band dω/π S_h.

The dephasing of each mode is integrated numerically (Gauss-Legendre) along
the atomic arms and the photon legs, then filtered in the time domain with
the bilinear discretisation of the Lorentzian high-pass.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal

from .constants import C
from .geometry import APEX_SIGNS, RamanOptics, RhombGeometry
from .gw_background import GwBackground, evaluate_sh, mode_variance
from .kinematics import polarization_vectors, random_directions, rotate_directions, unit_vectors

SQRT2 = math.sqrt(2.0)
MIN_SAMPLES_PER_PERIOD = 20


@dataclass(frozen=True)
class FieldRealization:
    omega: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    helicity: np.ndarray
    amplitude: np.ndarray
    mode_var: np.ndarray
    bin_index: np.ndarray
    n_omega: int
    band: tuple
    n_dir: int
    seed: int | None
    realization: int = 0

    @property
    def n_modes(self):
        return self.omega.size

    def scaled(self, lam):
        return replace(self, amplitude=self.amplitude * lam, mode_var=self.mode_var * lam**2)


def realization_rng(seed, realization):
    """Independent, reproducible stream for one realisation."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(realization),)))


def synthesize(bg: GwBackground, n_omega: int, n_dir: int, seed, realization=0, band=None,
               spacing="linear", rotation=None) -> FieldRealization:
    """Draw one field realisation (see module docstring)."""
    if n_omega < 2 or n_dir < 2:
        raise ValueError("need n_omega >= 2 and n_dir >= 2")
    lo, hi = bg.band if band is None else band
    if not (0 < lo < hi) or math.isinf(hi):
        raise ValueError(f"synthesis needs a finite, non-empty band, got {(lo, hi)}")
    rng = realization_rng(seed, realization)
    if spacing == "linear":
        edges = np.linspace(lo, hi, n_omega + 1)
    elif spacing == "log":
        edges = np.geomspace(lo, hi, n_omega + 1)
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    width = np.diff(edges)
    w_bin = edges[:-1] + width * rng.uniform(size=n_omega)
    th, ph = random_directions(rng, n_omega * n_dir * 2)
    if rotation is not None:
        th, ph = rotate_directions(rotation, th, ph)
    bins = np.repeat(np.arange(n_omega), 2 * n_dir)
    hel = np.tile(np.repeat([1, -1], n_dir), n_omega)
    w = w_bin[bins]
    var = mode_variance(bg, w, width[bins], n_dir)
    z = rng.standard_normal((2, w.size))
    amp = np.sqrt(var / 2.0) * (z[0] + 1j * z[1])
    return FieldRealization(w, th, ph, hel, amp, var, bins, n_omega, (lo, hi), n_dir, seed, realization)


def single_mode(omega, theta, phi, helicity, amplitude) -> FieldRealization:
    """A realisation holding one plane wave with a chosen amplitude."""
    a = np.array([complex(amplitude)])
    return FieldRealization(np.array([float(omega)]), np.array([float(theta)]), np.array([float(phi)]),
                            np.array([int(helicity)]), a, np.abs(a) ** 2, np.array([0]), 1,
                            (float(omega), float(omega)), 1, None)


def _pol_tensors(re: FieldRealization):
    e = np.empty((re.n_modes, 3), dtype=complex)
    for gam in (1, -1):
        sel = re.helicity == gam
        e[sel] = polarization_vectors(re.theta[sel], re.phi[sel], gam)
    ec = np.conj(e)
    return ec[:, :, None] * ec[:, None, :] / SQRT2


def field_at(re: FieldRealization, t, x, return_complex=False):
    """h_ij(t, x) as a 3×3 array (the conjugate partners are included)."""
    eps = _pol_tensors(re)
    n = unit_vectors(re.theta, re.phi)
    phase = np.exp(-1j * re.omega * (t - n @ np.asarray(x, dtype=float) / C))
    pos = np.tensordot(re.amplitude * phase, eps, axes=(0, 0))
    h = pos + np.conj(pos)
    return h if return_complex else h.real


def h12_series(re: FieldRealization, t_grid):
    """h_12(t, 0) on a time grid."""
    eps12 = _pol_tensors(re)[:, 0, 1]
    coef = np.bincount(re.bin_index, weights=(re.amplitude * eps12).real, minlength=re.n_omega) \
        + 1j * np.bincount(re.bin_index, weights=(re.amplitude * eps12).imag, minlength=re.n_omega)
    return _bin_series(re, coef, t_grid)


def _bin_omegas(re):
    w = np.zeros(re.n_omega)
    w[re.bin_index] = re.omega
    return w


def _bin_series(re, coef, t_grid):
    w = _bin_omegas(re)
    t = np.asarray(t_grid, dtype=float)
    out = np.empty(t.size)
    step = 4096
    for i in range(0, t.size, step):
        out[i:i + step] = 2.0 * (np.exp(-1j * np.outer(t[i:i + step], w)) @ coef).real
    return out


def _gl_line(eps, n, omega, start, end, k0, u, n_nodes):
    """(k0/2) ∫ ε:uu exp(-iω(t - n·x/c)) c dt along a straight line, per mode."""
    (t0, x0), (t1, x1) = start, end
    x, wx = np.polynomial.legendre.leggauss(n_nodes)
    dt = t1 - t0
    ts = 0.5 * dt * (x + 1.0)
    xs = np.asarray(x0)[None, :] + np.outer(0.5 * (x + 1.0), np.asarray(x1) - np.asarray(x0))
    eta = t0 + ts[None, :] - (n @ xs.T) / C
    uu = np.einsum("mij,i,j->m", eps, u, u)
    return 0.5 * k0 * uu * (np.exp(-1j * omega[:, None] * eta) @ (0.5 * dt * wx)) * C


def _nodes_for(duration, w_max, n_nodes):
    need = max(8, int(math.ceil(MIN_SAMPLES_PER_PERIOD * w_max * abs(duration) / (2 * math.pi))))
    if n_nodes is None:
        return need
    if n_nodes < need:
        raise ValueError(f"{n_nodes} nodes under-resolve a {duration:g} s segment at omega={w_max:g}; "
                         f"need >= {need}")
    return n_nodes


def mode_responses(re: FieldRealization, g: RhombGeometry, o: RamanOptics | None = None,
                   n_nodes=None, parts=False):
    """Numerical dephasing coefficient R_m of every mode.

    Φ(t₀) = Σ_m 2 Re[a_m R_m e^{-iω_m t₀}].  With ``parts=True`` returns
    (atomic, photonic) separately.
    """
    eps = _pol_tensors(re)
    n = unit_vectors(re.theta, re.phi)
    w = re.omega
    w_max = float(w.max()) if w.size else 0.0
    r_at = np.zeros(w.size, dtype=complex)
    for _, s, e, u, sign in g.segments():
        r_at += sign * _gl_line(eps, n, w, s, e, g.k0, u, _nodes_for(e[0] - s[0], w_max, n_nodes))
    r_ph = np.zeros(w.size, dtype=complex)
    if o is not None:
        local = np.zeros(w.size, dtype=complex)
        for _, s, e, u, sign in o.legs(0.0, np.zeros(3)):
            local += sign * _gl_line(eps, n, w, s, e, o.k0, u, _nodes_for(e[0] - s[0], w_max, n_nodes))
        for k, (t, x) in g.apexes().items():
            r_ph += APEX_SIGNS[k] * np.exp(-1j * w * (t - n @ x / C))
        r_ph *= local
    return (r_at, r_ph) if parts else r_at + r_ph


def dephasing_series(re: FieldRealization, g: RhombGeometry, o: RamanOptics | None, t_grid, n_nodes=None):
    """Φ(t) for interferometer launches at the times ``t_grid``."""
    t = np.asarray(t_grid, dtype=float)
    if t.size > 2 and not np.allclose(np.diff(t), t[1] - t[0], rtol=1e-9, atol=0):
        raise ValueError("t_grid must be uniform")
    r = mode_responses(re, g, o, n_nodes)
    c = re.amplitude * r
    coef = np.bincount(re.bin_index, weights=c.real, minlength=re.n_omega) \
        + 1j * np.bincount(re.bin_index, weights=c.imag, minlength=re.n_omega)
    return _bin_series(re, coef, t)


def highpass(series, dt, gamma):
    """Bilinear-transform discretisation of δΦ = (-iω/(Γ - iω)) Φ."""
    b, a = signal.bilinear([1.0, 0.0], [1.0, gamma], fs=1.0 / dt)
    return signal.lfilter(b, a, series, axis=-1)


@dataclass(frozen=True)
class VisibilityEstimate:
    variance: float
    stderr: float
    visibility: float
    visibility_direct: float
    visibility_direct_stderr: float
    n_realizations: int


def empirical_visibility(series, dt, gamma, burn_in=None, min_realizations=30) -> VisibilityEstimate:
    """Filter raw Φ series (one row per realisation) and estimate Var and V.

    The first ``burn_in`` seconds (default 20/Γ) of every filtered row are
    dropped.  V is estimated both as exp(-Var/2) and as the mean of cos δΦ.
    """
    s = np.atleast_2d(np.asarray(series, dtype=float))
    nr = s.shape[0]
    if nr < min_realizations:
        raise ValueError(f"need at least {min_realizations} realisations, got {nr}")
    burn = 20.0 / gamma if burn_in is None else burn_in
    k0 = int(math.ceil(burn / dt))
    d = highpass(s, dt, gamma)[:, k0:]
    if d.shape[1] == 0:
        raise ValueError("series shorter than the burn-in")
    per_var = np.mean(d * d, axis=1)
    per_cos = np.mean(np.cos(d), axis=1)
    var = float(per_var.mean())
    return VisibilityEstimate(var, float(per_var.std(ddof=1) / math.sqrt(nr)), math.exp(-0.5 * var),
                              float(per_cos.mean()), float(per_cos.std(ddof=1) / math.sqrt(nr)), nr)


@dataclass(frozen=True)
class McOptions:
    n_omega: int = 48
    n_dir: int = 12
    n_realizations: int = 200
    seed: int = 12345
    dt: float | None = None
    burn_in: float = 20.0      # in units of 1/Γ
    window: float = 10.0       # in units of 1/Γ
    n_nodes: int | None = None
    include_photonic: bool = True
    amplitude_scale: float = 1.0
    spacing: str = "linear"
    rotation: tuple | None = None
    jobs: int = 1


@dataclass(frozen=True)
class McResult:
    calibration: float
    calibration_stderr: float
    calibration_target: float
    estimate: VisibilityEstimate
    per_realization_var: np.ndarray = field(repr=False)
    per_realization_h12: np.ndarray = field(repr=False)
    dt: float = 0.0


def _time_grid(bg, gamma, opts):
    hi = bg.band[1]
    dt = opts.dt if opts.dt is not None else min(500.0, 0.5 * math.pi / hi)
    if math.pi / dt <= hi:
        raise ValueError(f"dt={dt:g} s does not resolve the band edge {hi:g} rad/s")
    n = int(math.ceil((opts.burn_in + opts.window) / (gamma * dt)))
    return dt, dt * np.arange(n)


def _one_realization(args):
    bg, g, o, gamma, opts, k = args
    re = synthesize(bg, opts.n_omega, opts.n_dir, opts.seed, k, spacing=opts.spacing,
                    rotation=None if opts.rotation is None else np.asarray(opts.rotation))
    if opts.amplitude_scale != 1.0:
        re = re.scaled(opts.amplitude_scale)
    dt, t = _time_grid(bg, gamma, opts)
    phi = dephasing_series(re, g, o if opts.include_photonic else None, t, opts.n_nodes)
    h12 = h12_series(re, t)
    d = highpass(phi, dt, gamma)[int(math.ceil(opts.burn_in / (gamma * dt))):]
    return float(np.mean(d * d)), float(np.mean(np.cos(d))), float(np.mean(h12 * h12)), phi


def run_monte_carlo(bg: GwBackground, g: RhombGeometry, o: RamanOptics | None, gamma: float,
                    opts: McOptions | None = None, keep_series=False):
    """Independent realisations (optionally in parallel), aggregated in index order."""
    opts = opts or McOptions()
    if opts.n_realizations < 30:
        raise ValueError("need at least 30 realisations")
    tasks = [(bg, g, o, gamma, opts, k) for k in range(opts.n_realizations)]
    if opts.jobs > 1:
        with ProcessPoolExecutor(max_workers=opts.jobs) as ex:
            out = list(ex.map(_one_realization, tasks, chunksize=max(1, len(tasks) // (4 * opts.jobs))))
    else:
        out = [_one_realization(t) for t in tasks]
    pv = np.array([r[0] for r in out])
    pc = np.array([r[1] for r in out])
    ph = np.array([r[2] for r in out])
    nr = pv.size
    var = float(pv.mean())
    est = VisibilityEstimate(var, float(pv.std(ddof=1) / math.sqrt(nr)), math.exp(-0.5 * var),
                             float(pc.mean()), float(pc.std(ddof=1) / math.sqrt(nr)), nr)
    target = bg.band_integral() * opts.amplitude_scale**2
    dt, _ = _time_grid(bg, gamma, opts)
    res = McResult(float(ph.mean()), float(ph.std(ddof=1) / math.sqrt(nr)), target, est, pv, ph, dt)
    if keep_series:
        return res, np.array([r[3] for r in out])
    return res


def write_series_csv(path, t, phi, dt, gamma):
    """Export (t, Phi, deltaPhi) for one realisation."""
    d = highpass(np.asarray(phi), dt, gamma)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "Phi", "deltaPhi"])
        for row in zip(t, phi, d):
            wr.writerow([repr(float(v)) for v in row])
