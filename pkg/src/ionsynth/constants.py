"""Physical constants (CODATA 2018, via scipy.constants)."""
from __future__ import annotations

from scipy import constants as _c

H = _c.h
HBAR = _c.hbar
EPSILON_0 = _c.epsilon_0
ELEMENTARY_CHARGE = _c.e
ATOMIC_MASS = _c.atomic_mass
