"""What does the item-parameter prior imply about vote probabilities?

Draws positions and item parameters from the prior and histograms the
implied probability of an affirmative vote.  At the default hyperparameters
the distribution is roughly U-shaped with extra mass near one: most votes
are expected to be clear-cut, and slightly more of them pass than fail.
Writes prior_theta.csv (consumed by the prior-hist figure kind).
"""

import numpy as np

from unfolding import Hyperparams, RngStream, sample_prior_theta

hyper = Hyperparams()
theta = sample_prior_theta(hyper, 10_000, RngStream(20260810))

edges = np.linspace(0.0, 1.0, 21)
counts, _ = np.histogram(theta, bins=edges)
peak = counts.max()
print(f"prior on the affirmative-vote probability "
      f"(vartheta={tuple(hyper.vartheta)}, omega^2={hyper.omega_sq}, kappa^2={hyper.kappa_sq}):\n")
for lo, hi, c in zip(edges[:-1], edges[1:], counts):
    bar = "#" * max(1, round(40 * c / peak)) if c else ""
    print(f"  ({lo:.2f}, {hi:.2f}]  {c:5d}  {bar}")

print(f"\nmass below 0.1: {np.mean(theta < 0.1):.3f}")
print(f"mass above 0.9: {np.mean(theta > 0.9):.3f}")
print(f"mass in (0.45, 0.55): {np.mean((theta > 0.45) & (theta < 0.55)):.3f}")

np.savetxt("prior_theta.csv", theta, header="theta", comments="")
print("\nwrote prior_theta.csv")
