"""Direct quadrature of the quadratic collision form Gamma(f, f) at a few velocities.

f(v) = sqrt(mu(v)) * a * (exp(-|v - c1|^2 / (2 s^2)) + exp(-|v - c2|^2 / (2 s^2))),
a sum of two shifted Maxwellians (so Gamma(f, f) does not vanish), with
  Gamma_+(f, f)(v) = int int |(v-u).w| sqrt(mu(u)) f(v') f(u') dw du
  Gamma_-(f, f)(v) = f(v) int int |(v-u).w| sqrt(mu(u)) f(u) dw du
using u = v - r e and w measured from e, as in grad_kernel_oracle.py.

Prints C++ initializer rows {v1, v2, v3, gain, loss}.
"""

import numpy as np

from grad_kernel_oracle import frame, sphere_rule, sqrt_mu

A = 0.5
C1 = np.array([0.8, -0.3, 0.2])
C2 = np.array([-0.6, 0.4, -0.5])
S = 1.0


def f(x):
    d1 = x - C1
    d2 = x - C2
    return sqrt_mu(x) * A * (np.exp(-np.sum(d1 * d1, axis=-1) / (2 * S * S))
                             + np.exp(-np.sum(d2 * d2, axis=-1) / (2 * S * S)))


def gamma(v, n_r=48, r_max=14.0):
    xr, wr = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * r_max * (xr + 1)
    wr = 0.5 * r_max * wr
    e, we = sphere_rule(24, 48)
    a, b = frame(e)
    xh, wh = np.polynomial.legendre.leggauss(16)
    cth = np.concatenate([0.5 * (xh + 1), -0.5 * (xh + 1)])
    wth = np.concatenate([0.5 * wh, 0.5 * wh])
    n_phi = 32
    phi = (np.arange(n_phi) + 0.5) * 2 * np.pi / n_phi
    wphi = 2 * np.pi / n_phi
    sth = np.sqrt(1 - cth * cth)
    gain = 0.0
    loss = 0.0
    for ir in range(n_r):
        u = v[None, :] - r[ir] * e
        om = cth[None, :, None, None] * e[:, None, None, :] + sth[None, :, None, None] * (
            np.cos(phi)[None, None, :, None] * a[:, None, None, :]
            + np.sin(phi)[None, None, :, None] * b[:, None, None, :]
        )
        proj = r[ir] * cth[None, :, None]
        vp = v[None, None, None, :] - proj[..., None] * om
        up = u[:, None, None, :] + proj[..., None] * om
        g = np.sum(np.abs(proj) * f(vp) * f(up) * wth[None, :, None], axis=(1, 2)) * wphi
        ang = np.sum(np.abs(cth) * wth) * n_phi * wphi * r[ir]
        jac = wr[ir] * r[ir] ** 2
        gain += jac * np.sum(we * sqrt_mu(u) * g)
        loss += jac * np.sum(we * sqrt_mu(u) * f(u) * ang)
    return gain, f(v) * loss


def main():
    # Grid nodes of the default 12-point-per-axis grid on [-5.4, 5.4].
    h = 0.9
    nodes = [(-0.45, -0.45, 0.45), (0.45, -0.45, 0.45), (1.35, 0.45, -0.45), (-1.35, 0.45, 1.35),
             (0.45, 1.35, -1.35), (2.25, -0.45, 0.45), (-2.25, 1.35, -0.45), (0.45, -2.25, -2.25),
             (3.15, 0.45, 0.45), (-0.45, 3.15, -1.35)]
    assert all(abs((x / h) - round(x / h - 0.5) - 0.5) < 1e-12 for p in nodes for x in p)
    for p in nodes:
        v = np.array(p)
        g, l = gamma(v)
        print("    {" + ", ".join(f"{x:.17g}" for x in (*v, g, l)) + "},")


if __name__ == "__main__":
    main()
