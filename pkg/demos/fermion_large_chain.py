"""Free-fermion intensities and second moments for long chains."""

import time

import numpy as np

from mqcdecay import fermion

b = 7.9e3
taus = np.linspace(5e-6, 3e-4, 12)

for n in (100, 1000):
    model = fermion.FermionModel(n, b)
    start = time.perf_counter()
    rows = [fermion.moments(model, t) for t in taus]
    dt = time.perf_counter() - start
    print(f"N = {n}: {len(taus)} moment breakdowns in {dt:.2f} s")
    print(f"{'tau (us)':>9} {'I0':>7} {'I2':>7} {'M_ZQ/b^2':>9} {'M_DQ/b^2':>9} {'Mxx_ZQ/b^2':>11}")
    for t, m in zip(taus, rows):
        print(f"{t * 1e6:9.1f} {m.i0:7.4f} {m.i2:7.4f} {m.m_zq / b**2:9.3f} "
              f"{m.m_dq / b**2:9.3f} {m.m_xx_zq / b**2:11.4f}")

print("\ninfinite chain (Bessel forms):")
for t in (5e-5, 1e-4, 2e-4):
    print(f"  tau = {t * 1e6:5.0f} us: I2 = {float(fermion.i2_infinite(b, t)):.4f}, "
          f"C = {float(fermion.asymptote_c_infinite(b, t)):.4f}")
