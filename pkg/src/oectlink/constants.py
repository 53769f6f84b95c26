"""Physical constants (SI, CODATA 2018 exact values)."""

BOLTZMANN = 1.380649e-23          # J/K
ELEMENTARY_CHARGE = 1.602176634e-19  # C
AVOGADRO = 6.02214076e23          # 1/mol

# molecules/m^3 per mol/L: 1 M = 1000 mol/m^3
PER_M3_PER_MOLAR = 1000.0 * AVOGADRO
