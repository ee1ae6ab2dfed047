"""The two bijections onto unit p-norm spheres and their density terms.

Walks the stick-breaking map (R^d -> simplex) and the stereographic map
(R^d -> hypersphere): anchor points, exact round trips, the O(d)
log-determinants against finite-difference Jacobians, and a picture of
the pulled-back base densities on R^2.

Run:  python demos/02_manifold_maps.py        (writes demos/output/pullbacks.png)
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from pnflows import (DirichletBase, VmfBase, log_density, simplex_forward,
                     simplex_inverse, sphere_forward, sphere_inverse)


def numeric_log_det(fn, z, square, h=1e-6):
    cols = []
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h
        cols.append((fn(z + e) - fn(z - e)) / (2 * h))
    jac = np.stack(cols, axis=-1)
    if square:
        return np.linalg.slogdet(jac)[1]
    return 0.5 * np.linalg.slogdet(jac.T @ jac)[1]


def main():
    rng = np.random.default_rng(1)
    out_dir = Path(__file__).parent / "output"
    out_dir.mkdir(exist_ok=True)

    print("== Anchors ==")
    res = simplex_forward(np.zeros(2))
    print(f"stick-breaking sends 0 to the barycenter: {res.point}")
    res = sphere_forward(np.zeros(2))
    print(f"stereographic sends 0 to the south pole:  {res.point}\n")

    print("== Round trips (1000 points per dimension) ==")
    for d in (1, 2, 8, 64):
        z = rng.standard_normal((1000, d)) * 2
        err_simplex = np.abs(simplex_inverse(simplex_forward(z).point) - z).max()
        err_sphere = np.abs(sphere_inverse(sphere_forward(z).point) - z).max()
        print(f"d={d:3d}: simplex {err_simplex:.2e}   sphere {err_sphere:.2e}")

    print("\n== Log-determinants vs finite differences ==")
    for d in (2, 5):
        z = rng.standard_normal(d)
        analytic = simplex_forward(z).log_det
        numeric = numeric_log_det(lambda t: simplex_forward(t).point[:d], z, True)
        print(f"simplex d={d}: analytic {analytic:+.6f}  numeric {numeric:+.6f}")
        analytic = sphere_forward(z).log_det
        numeric = numeric_log_det(lambda t: sphere_forward(t).point, z, False)
        print(f"sphere  d={d}: analytic {analytic:+.6f}  numeric {numeric:+.6f}")

    print("\n== Pulled-back densities on R^2 (rendering) ==")
    grid = np.linspace(-5, 5, 300)
    xx, yy = np.meshgrid(grid, grid, indexing="xy")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=1)

    dirichlet = DirichletBase(2, np.full(3, 2.0))
    res = simplex_forward(pts)
    dens_d = np.exp(log_density(dirichlet, res.point) + res.log_det).reshape(xx.shape)

    vmf = VmfBase(2, np.array([0.0, 0.0, -1.0]), 5.0)
    res = sphere_forward(pts)
    dens_v = np.exp(log_density(vmf, res.point) + res.log_det).reshape(xx.shape)

    step = grid[1] - grid[0]
    print(f"grid mass, Dirichlet pullback: {dens_d.sum() * step * step:.4f}")
    print(f"grid mass, vMF pullback:       {dens_v.sum() * step * step:.4f}")

    fig, axes = plt.subplots(1, 2, figsize=(10, 4.2), constrained_layout=True)
    for ax, dens, title in zip(axes, (dens_d, dens_v),
                               ("Dirichlet(2,2,2) pulled back through stick-breaking",
                                "vMF(kappa=5) pulled back through stereographic map")):
        im = ax.pcolormesh(xx, yy, dens, cmap="viridis", shading="auto")
        ax.set_title(title, fontsize=9)
        fig.colorbar(im, ax=ax, fraction=0.046)
    target = out_dir / "pullbacks.png"
    fig.savefig(target, dpi=120)
    print(f"wrote {target}")


if __name__ == "__main__":
    main()
