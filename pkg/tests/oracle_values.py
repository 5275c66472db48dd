"""Reference numbers computed once by tests/oracles/generate.py and frozen here.

None of them is produced by rgscalelab itself.
"""

import math

# smooth profile (steepness 1), n = 1, transform at |k| = 1; dense trapezoid grid
SMOOTH_FOURIER_N1_K1 = 1.9682687602137086

# smooth profile, n = 3, (f*f)(|y| = 0.7): 10^7-sample Monte Carlo and nested adaptive quadrature
SMOOTH_CONV_N3_Y07_MC = 9.164578162720375
SMOOTH_CONV_N3_Y07_MC_SE = 0.006198706903085577
SMOOTH_CONV_N3_Y07_NESTED = 9.181621641880868

# integral of f^2 for the smooth profile, n = 1
SMOOTH_L2_N1 = 2.8114105055467027

# F(0, 0) for n = 1, beta = 1, mu = -1, e = k^2, j = 1 with the cutoff |k| <= 5
THERMAL_F00_N1_KMAX5 = 1.8770463535123674

# integral |y + Y|^-1/2 (chi*chi)(y) dy, sharp n = 1; Y = 0 is 16 sqrt(2) / 3
CRITICAL_SHARP_N1_Y0 = 7.542472332656507
CRITICAL_SHARP_N1_Y3 = 2.384046722780913

# tau -> limit of C_R(R^alpha tau), sharp n = 1, alpha = 1/2, beta = 1, j = 1
RESCALED_SHARP_N1_TAU0 = 6.018022224509401
RESCALED_SHARP_N1_TAU1 = 4.380528281021147

# Bose factor at beta (e - mu) = 1
J_PLUS_UNIT = 1.0 / (1.0 - math.exp(-1.0))
