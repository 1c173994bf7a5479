"""Physical constants in hartree atomic units (hbar = e = m_e = 1)."""

C_LIGHT = 137.035999
# mc^2/hbar in atomic units
DEFAULT_CUTOFF = C_LIGHT**2
HARTREE_MHZ = 6.5796839e9
UNITS_TAG = "hartree-atomic"
