"""Compare the compiled and numpy kernels on the azimuthal |Ψ|² mean.

Usage: python benchmarks/bench_kernels.py [--n-omega N] [--repeat R]
"""
import argparse
import time

import numpy as np

from gravidec._kernels import _pykernels
from gravidec.geometry import preset_instrument
from gravidec.kinematics import DEFAULT_QUADRATURE

try:
    from gravidec._kernels import _ckernels
except ImportError:
    _ckernels = None


def _inputs(n_omega):
    g, _ = preset_instrument()
    u, _ = DEFAULT_QUADRATURE.cos_rule()
    phi, wphi = DEFAULT_QUADRATURE.phi_rule()
    omega = np.geomspace(1e-3, 1e2, n_omega)
    b = g.beta
    return (omega, u, np.cos(phi), wphi, g.tau_ab, b * np.sin(g.alpha), b * np.cos(g.alpha))


def _time(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n-omega", type=int, default=400)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    inputs = _inputs(args.n_omega)
    t_py, ref = _time(_pykernels.psi_big_sq_phi_mean, inputs, args.repeat)
    print(f"numpy   {t_py * 1e3:9.2f} ms")
    if _ckernels is None:
        print("cython  not built")
        return
    t_c, out = _time(_ckernels.psi_big_sq_phi_mean, inputs, args.repeat)
    err = np.max(np.abs(out - ref) / np.maximum(np.abs(ref), 1e-300))
    print(f"cython  {t_c * 1e3:9.2f} ms   speedup {t_py / t_c:5.1f}x   max rel diff {err:.1e}")


if __name__ == "__main__":
    main()
