"""Regenerate tests/data/moment_oracle.npz.

Draws a randomized grid of (y, p, vp, s2, T) with magnitudes log-uniform on
[1e-3, 1e3] (y and p with random sign) and stores posterior moments computed
by mpmath quadrature.  Takes ~20 minutes on one core.

    python scripts/freeze_moment_oracle.py [n_points]
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "tests"))
from oracles import posterior_moments_quad  # noqa: E402


def main(n=10_000, seed=20240607):
    rng = np.random.default_rng(seed)

    def mag(size):
        return 10.0 ** rng.uniform(-3.0, 3.0, size)

    y = rng.choice([-1.0, 1.0], n) * mag(n)
    p = rng.choice([-1.0, 1.0], n) * mag(n)
    vp, s2, T = mag(n), mag(n), mag(n)
    zhat = np.empty(n)
    vz = np.empty(n)
    for i in range(n):
        zhat[i], vz[i] = posterior_moments_quad(y[i], p[i], vp[i], s2[i], T[i])
        if i % 500 == 0:
            print(i, flush=True)
    out = pathlib.Path(__file__).resolve().parents[1] / "tests" / "data" / "moment_oracle.npz"
    np.savez_compressed(out, y=y, p=p, vp=vp, s2=s2, T=T, zhat=zhat, vz=vz, seed=seed)
    print("wrote", out)


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 10_000)
