"""Physical constants (SI), fixed so that every output is bit-reproducible."""

C = 299792458.0            # speed of light, m/s
G = 6.67430e-11            # Newton constant, m^3 kg^-1 s^-2
HBAR = 1.054571817e-34     # reduced Planck constant, J s
K_B = 1.380649e-23         # Boltzmann constant, J/K

#: coefficient in S_h = (16 G / 5 c^5) k_B T_gw
STRAIN_THERMAL_COEFF = 16.0 * G / (5.0 * C**5)

PLANCK_TIME = (G * HBAR / C**5) ** 0.5

CONSTANTS = {
    "c": C,
    "G": G,
    "hbar": HBAR,
    "k_B": K_B,
}
