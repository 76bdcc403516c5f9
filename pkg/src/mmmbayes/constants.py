"""Physical constants used throughout the package.

All values are SI.  CODATA 2018 for the fundamental constants, AME2016
for the atomic masses, and the standard vacuum D2-line wavelengths for
the photon recoils.  Everything downstream imports from here so that a
single table controls the numbers.
"""
from __future__ import annotations

# Fundamental constants (CODATA 2018; h is exact in the 2019 SI).
PLANCK_H = 6.62607015e-34  # J s
HBAR = 1.054571817e-34  # J s
ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg
ELECTRON_MASS = 9.1093837015e-31  # kg
NEUTRON_MASS = 1.67492749804e-27  # kg
NEUTRON_ELECTRON_MASS_RATIO = 1838.68366173

# Atomic masses (AME2016), in kg.
RB87_MASS = 86.909180531 * ATOMIC_MASS_UNIT
CS133_MASS = 132.905451961 * ATOMIC_MASS_UNIT

# Vacuum D2-line wavelengths, in m.
RB87_D2_WAVELENGTH = 780.241209686e-9
CS133_D2_WAVELENGTH = 852.34727582e-9

# Single-photon recoil momenta h/lambda for the D2 lines, in kg m/s.
RB87_D2_RECOIL = PLANCK_H / RB87_D2_WAVELENGTH
CS133_D2_RECOIL = PLANCK_H / CS133_D2_WAVELENGTH

# Relativistic lower bound on the admissible coherence length hbar/sigma_q.
MIN_COHERENCE_LENGTH = 1.0e-14  # m (10 fm)
