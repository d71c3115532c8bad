"""Longer interrogation versus dephasing.

A longer interaction time T amplifies the phase alpha*T but also exposes
each qubit to more noise. The field-estimate error first falls as 1/T^2,
then rises once the exp(-n k T) decay dominates; the optimum sits near
T = 1/(n k).

    python demos/interrogation_tradeoff.py
"""

from sensebench import NoiseSpec, PhasePrior, ProtocolSpec, SensingSystem, monte_carlo_bmse

n, k, shots, trials = 5, 0.1, 10_000, 2000
print(f"n={n}, k={k}: expected optimum near T = {1 / (n * k):.1f}")
for t in (0.25, 0.5, 1.0, 2.0, 4.0, 8.0):
    system = SensingSystem(n, NoiseSpec.global_depolarizing(0.01, k_rate=k, interaction_time=t))
    s = monte_carlo_bmse(ProtocolSpec("noise-aware", shots), system, PhasePrior(alpha_prior=0.3, interaction_time=t), trials, seed=7)
    bar = "#" * max(1, int(40 * s.alpha_bmse / 3e-4))
    print(f"T={t:<5} BMSE[alpha] = {s.alpha_bmse:.3e} +/- {s.alpha_stderr:.1e} {bar}")
