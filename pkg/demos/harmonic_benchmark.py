"""
Harmonic benchmark: exact, RPMD and matched-mass correlation of q^2
====================================================================

For V = q^2 / 2 (hbar = m = omega = 1) all three position-squared
correlation functions have closed forms.  They agree at t = 0; RPMD
mixes the frequencies 2 omega_n of every polymer mode and so slowly
dephases, while matched fictitious masses pin every mode to omega.
"""

import numpy as np

from rpccd import (Harmonic, MatchedFrequency, SystemSpec, analytic_kubo_q2, analytic_nm_ccd_q2, analytic_rpmd_q2,
                   build_basis, oscillation_envelope)

t = np.round(np.arange(2001) * 0.01, 12)

for beta in (1.0, 10.0):
    spec = SystemSpec(1.0, beta, 1000, Harmonic(1.0))
    exact = analytic_kubo_q2(spec, t).values
    rpmd = analytic_rpmd_q2(spec, t).values
    nm = analytic_nm_ccd_q2(spec, MatchedFrequency(1.0), t).values

    print(f"beta = {beta:g}, P = 1000")
    print("     t      exact       RPMD    matched")
    for k in range(0, 2001, 250):
        print(f"{t[k]:6.2f} {exact[k]:10.5f} {rpmd[k]:10.5f} {nm[k]:10.5f}")

    # oscillation amplitude of the mode sum at t = 0, then what is left over the last period
    w = build_basis(spec).mode_frequencies_with_harmonic(1.0)
    amp0 = 2 * np.sum(1 / (beta * w**2) ** 2)
    for name, series in (("RPMD", rpmd), ("matched", nm)):
        kept = oscillation_envelope(t, series, 20.0, np.pi) / amp0
        print(f"  {name:8s} envelope at t = 20: {kept:.3f} of its t = 0 amplitude")
    print()

# the RPMD envelope is not monotone: the centroid beats against the slowest
# polymer pair, whose frequency sits well above omega at low temperature
spec = SystemSpec(1.0, 10.0, 1000, Harmonic(1.0))
w1 = build_basis(spec).mode_frequencies_with_harmonic(1.0)[0]
print(f"omega_1 = {w1:.4f}; beat period pi / (omega_1 - omega) = {np.pi / (w1 - 1):.2f}")
