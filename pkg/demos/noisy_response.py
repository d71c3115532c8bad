"""Noisy GHZ parity fringes.

Builds the same n-qubit GHZ sensor under three noise models, checks the
dense simulator against the closed forms and shows how boosting the fault
rate shrinks the fringe.

    python demos/noisy_response.py
"""

import math

import numpy as np

from sensebench import NoiseSpec, make_source, simulate_response
from sensebench.noise import bundled_noise_model_path, load_lindblad_toml

n = 5
theta = np.linspace(0.0, math.pi / n, 7)

models = {
    "global depolarizing, lambda=0.1": NoiseSpec.global_depolarizing(0.1),
    "local depolarizing, p=9e-3": NoiseSpec.local_depolarizing(9e-3),
    "Pauli-Lindblad (synthetic, 5x)": NoiseSpec.pauli_lindblad(load_lindblad_toml(bundled_noise_model_path(), 5.0)),
}

print(f"GHZ parity response, n={n}")
print("theta      " + "  ".join(f"{t:7.4f}" for t in theta))
print("noiseless  " + "  ".join(f"{v:7.4f}" for v in np.cos(n * theta)))
for name, spec in models.items():
    src = make_source(n, spec)
    print(f"{name[:10]:<10} " + "  ".join(f"{v:7.4f}" for v in src(theta)) + f"   <- {name}")

# the simulator is the reference for the two closed forms
spec = NoiseSpec.local_depolarizing(9e-3)
gap = max(abs(simulate_response(n, spec, t) - (1 - 9e-3) ** (n - 1) * math.cos(n * t)) for t in theta)
print(f"\nlocal depolarizing: simulator vs (1-p)^(n-1) cos(n theta), max gap {gap:.1e}")

# boosting multiplies every fault rate by x; for global depolarizing the
# amplitude is exp(-x lambda)
src = make_source(n, NoiseSpec.global_depolarizing(0.1))
for x in (1.0, 1.75, 4.0, 8.1):
    print(f"boost x={x:<4}: fringe amplitude {src.boosted(x)(0.0):.4f} (exp(-{x}*0.1) = {math.exp(-0.1 * x):.4f})")
