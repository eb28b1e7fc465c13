"""Density ratio series, its remainder bound and the contour-integral value."""
from skewexact import ThetaParams, contour_oracle, v_theta

th = ThetaParams(0.5, -0.5, 1.0)
for N in range(4):
    tv = v_theta(0.55, 0.5, 0.5, th, N=N)
    print(f"N={N}: v = {float(tv.value):.12f}, remainder bound {tv.remainder_bound:.2e}")
print(f"contour integral: {contour_oracle(0.55, 0.5, 0.5, th):.12f}")
