"""Physical constants in frequency units (energies are carried as E/h in Hz)."""
import math

from scipy import constants as _sc

MU_B_OVER_H = 13.996245e9    # Hz/T
K_B_OVER_H = 20.836619e9     # Hz/K
MU_N_OVER_H = 7.622593e6     # Hz/T

MU_B = _sc.physical_constants["Bohr magneton"][0]
MU_0 = _sc.mu_0
HBAR = _sc.hbar
H_PLANCK = _sc.h

TWO_PI = 2.0 * math.pi

# Working point of the measurements the defaults describe.
WORKING_FREQUENCY = 5.67e9   # Hz
WORKING_FIELD = 0.259        # T
WORKING_TEMPERATURE = 0.026  # K
