"""Synthetic decay curves and coupling fits."""

import numpy as np

from mqcdecay import fermion, fitting
from mqcdecay.fitting import DecayCurve, FitModel

rng = np.random.default_rng(0)
t = np.linspace(0, 145e-6, 30)

truth = {"A": 1.0, "M": 4e8, "C": 0.3}
y = fitting.gaussian_model(t, **truth) * (1 + 0.01 * rng.standard_normal(t.size))
g = fitting.fit_gaussian(DecayCurve(t, y, sigma=0.01 * np.abs(y)))
print("Gaussian fit with 1% noise")
for k, v in truth.items():
    print(f"  {k}: {g.params[k]:.4g} +- {g.stderr[k]:.2g} (truth {v:.4g})")

truth = {"A": 1.0, "m1": 1e8, "m2": 3e4, "C": 0.3}
y = fitting.sinc_gaussian_model(t, **truth) * (1 + 0.01 * rng.standard_normal(t.size))
s = fitting.fit_sinc_gaussian(DecayCurve(t, y, sigma=0.01 * np.abs(y)))
M_true = truth["m1"] + truth["m2"] ** 2 / 3
print(f"sinc-Gaussian: M = {s.params['M']:.4g} +- {s.stderr['M']:.2g} (truth {M_true:.4g})")

taus = np.linspace(0, 4e-4, 40)
for b, name in ((8.17e3, FitModel.INTENSITY_I2), (7.676e3, FitModel.ASYMPTOTE_C)):
    data = fitting.intensity_model(name, b, taus) + (2e2 * taus if name is FitModel.ASYMPTOTE_C else 0)
    r = fitting.fit_model_b(taus, data, name, drift=name is FitModel.ASYMPTOTE_C)
    extra = f", drift {r.params['drift']:.1f} /s" if "drift" in r.params else ""
    print(f"{name.value}: b = {r.params['b']:.2f} rad/s (generated at {b}){extra}")
