"""Tour of the three base distributions and temperature sampling.

Draws from the Gaussian, the von Mises-Fisher on the sphere, and the
Dirichlet on the simplex; checks the norm laws that motivate fixed-norm
bases (Gaussian squared norms concentrate at d, never at 0) and the
temperature rules sigma' = T and kappa' = kappa / T^2.

Run:  python demos/01_base_distributions.py
"""

import numpy as np

from pnflows import (DirichletBase, GaussianBase, Temperature, VmfBase,
                     log_density, sample, vmf_mean_resultant_length,
                     with_temperature)


def south_pole(d):
    mu = np.zeros(d + 1)
    mu[-1] = -1.0
    return mu


def main():
    rng = np.random.default_rng(0)

    print("== Gaussian norms concentrate at sqrt(d), not at the origin ==")
    d = 512
    z = sample(GaussianBase(d), 20000, rng=rng)
    sq = (z ** 2).sum(axis=1)
    print(f"d={d}: mean ||z||^2 = {sq.mean():8.2f}   (chi-squared mean d = {d})")
    print(f"       5th..95th percentile of ||z||^2: "
          f"[{np.percentile(sq, 5):7.2f}, {np.percentile(sq, 95):7.2f}]")
    print("       -> a lerp midpoint at ||z||^2 ~ d/2 sits far outside this band\n")

    print("== Temperature laws ==")
    for temp in (0.25, 0.5, 1.0, 2.0):
        z = sample(GaussianBase(100), 20000, Temperature(temp), rng)
        print(f"Gaussian T={temp:4.2f}: mean ||Tz||^2 = {(z**2).sum(1).mean():7.2f} "
              f"(law T^2 d = {temp**2 * 100:6.2f})")
    vmf = VmfBase(9, south_pole(9), kappa=20.0)
    for temp in (0.5, 1.0, 2.0):
        tempered = with_temperature(vmf, Temperature(temp))
        s = sample(tempered, 20000, rng=rng)
        mrl = np.linalg.norm(s.mean(axis=0))
        print(f"vMF kappa=20, T={temp:4.2f} -> kappa'={tempered.kappa:6.1f}: "
              f"resultant length {mrl:.4f} "
              f"(Bessel ratio {vmf_mean_resultant_length(9, tempered.kappa):.4f})")
    print("(the Dirichlet base has no temperature rule; T != 1 raises)\n")

    print("== Exact densities with full normalizers ==")
    print(f"N(0, I_1) at 0:              {log_density(GaussianBase(1), np.zeros(1)):+.5f}")
    dirichlet = DirichletBase(2, np.full(3, 2.0))
    print(f"Dir(2,2,2) at barycenter:    "
          f"{log_density(dirichlet, np.full(3, 1/3)):+.5f}  (= ln 120/27)")
    circle = VmfBase(1, south_pole(1), 1.0)
    print(f"vMF(kappa=1) at mu (circle): "
          f"{log_density(circle, south_pole(1)):+.5f}  (= 1 - ln 2*pi*I0(1))")

    print("\n== Supports are exact ==")
    s = sample(VmfBase(4, south_pole(4), 8.0), 1000, rng=rng)
    print(f"vMF samples:      max | ||s||_2 - 1 | = {np.abs(np.linalg.norm(s, axis=1) - 1).max():.2e}")
    s = sample(dirichlet, 1000, rng=rng)
    print(f"Dirichlet samples: max | sum(s) - 1 | = {np.abs(s.sum(axis=1) - 1).max():.2e}, "
          f"min coordinate = {s.min():.4f}")


if __name__ == "__main__":
    main()
