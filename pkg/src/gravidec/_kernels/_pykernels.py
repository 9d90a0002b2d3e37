"""Pure numpy implementations of the hot loops (reference and fallback)."""
import numpy as np

_CHUNK = 1 << 21


def psi_big_sq_phi_mean(omega, u, cphi, wphi, tau, b_sa, b_ca):
    """Azimuthal mean of |Ψ|² = f(ωη_AB) f(ωη_AC) at every (ω, u).

    η_AB = τ(1 - b_sa·u - b_ca·sinθ·cosφ) and η_AC = τ(1 + b_sa·u - b_ca·sinθ·cosφ)
    with sinθ = √(1 - u²).  Returns an array of shape (len(omega), len(u)).
    """
    omega = np.ascontiguousarray(omega, dtype=float)
    u = np.ascontiguousarray(u, dtype=float)
    cphi = np.asarray(cphi, dtype=float)
    wphi = np.asarray(wphi, dtype=float)
    s = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    trans = b_ca * s[:, None] * cphi[None, :]            # (Nu, Nphi)
    lon = b_sa * u[:, None]
    e_ab = tau * (1.0 - lon - trans)
    e_ac = tau * (1.0 + lon - trans)
    out = np.empty((omega.size, u.size))
    step = max(1, _CHUNK // max(1, e_ab.size))
    for i in range(0, omega.size, step):
        w = omega[i:i + step, None, None]
        fab = 4.0 * np.sin(0.5 * w * e_ab) ** 2
        fac = 4.0 * np.sin(0.5 * w * e_ac) ** 2
        out[i:i + step] = (fab * fac) @ wphi
    return out
