import numpy as np
from scipy import constants as sc

C_LIGHT = sc.c
HBAR = sc.hbar
H_PLANCK = sc.h
EPSILON_0 = sc.epsilon_0
K_BOLTZMANN = sc.k
ATOMIC_MASS = sc.m_u
G_EARTH = 9.81

TWO_PI = 2.0 * np.pi


class _RB85_D2:
    """
    85Rb D2 line, |F=3> -> |F'=4> cycling transition.
    """
    WAVELENGTH = 780.241e-9
    GAMMA = TWO_PI * 3.0e6              # half the population decay rate (2*gamma = 2pi x 6 MHz)
    MASS = 84.911789732 * ATOMIC_MASS
    ZEEMAN_FACTOR = 3.0 / 7.0           # Clebsch-Gordan average over the F=3 sublevels


class _REFERENCE_CAVITY:
    """
    Fiber-chip plano-concave cavity used for the detection experiments.
    """
    LENGTH = 133e-6
    FINESSE = 280.0
    WAIST = 4.6e-6
    G = TWO_PI * 100e6                  # vacuum Rabi frequency 2g = 2pi x 200 MHz


class _REFERENCE_COUNTS:
    """
    Reflected count rates (counts/s) of the atom-detection experiment.
    """
    I_MAX = 419e3
    I_MIN = 272e3
    I_ATOMS = 315e3


class _REFERENCE_RUN:
    ATOM_COUNT = 2e7
    DROP_HEIGHT = 7e-3
    TOF_DROPS = 34
    NOISE_DROPS = 48
    TOF_BIN = 250e-6
    NOISE_BIN = 10e-6
    PEAK_N_EFF = 0.7
    DEAD_TIME = 44e-9
    BEAMSPLITTER_TRANSMISSION = 0.9
    DETECTOR_EFFICIENCY = 0.6
    SCAN_N_EFF = (1.1, 0.6)
