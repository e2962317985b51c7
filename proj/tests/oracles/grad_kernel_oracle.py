"""Direct quadrature of the hard-sphere K1 and K2 integrals on Gaussian bumps.

Evaluates, for phi(u) = exp(-|u - c|^2 / (2 s^2)),

  K1 phi(v) = int int |(v-u).w| sqrt(mu(v)) sqrt(mu(u)) phi(u) dw du
  K2 phi(v) = int int |(v-u).w| sqrt(mu(u)) [sqrt(mu(u')) phi(v') + sqrt(mu(v')) phi(u')] dw du

with v' = v - ((v-u).w) w and u' = u + ((v-u).w) w, over u in R^3 and w in S^2.
No reduced kernel is used. Coordinates are u = v - r e, and w is measured from e,
so |(v-u).w| = r |cos theta| and every integrand is smooth.

Prints C++ initializer rows {v1, v2, v3, c1, c2, c3, s, K1phi, K2phi}.
"""

import numpy as np

rng = np.random.default_rng(20240611)


def sqrt_mu(x):
    return (2 * np.pi) ** -0.75 * np.exp(-0.25 * np.sum(x * x, axis=-1))


def bump(x, c, s):
    d = x - c
    return np.exp(-np.sum(d * d, axis=-1) / (2 * s * s))


def sphere_rule(n_theta, n_phi):
    ct, wt = np.polynomial.legendre.leggauss(n_theta)
    ph = (np.arange(n_phi) + 0.5) * 2 * np.pi / n_phi
    st = np.sqrt(1 - ct * ct)
    e = np.stack(
        [np.outer(st, np.cos(ph)), np.outer(st, np.sin(ph)), np.outer(ct, np.ones_like(ph))], -1
    ).reshape(-1, 3)
    w = np.outer(wt, np.full(n_phi, 2 * np.pi / n_phi)).reshape(-1)
    return e, w


def frame(e):
    a = np.where(np.abs(e[:, :1]) < 0.9, np.array([[1.0, 0, 0]]), np.array([[0, 1.0, 0]]))
    a = a - np.sum(a * e, axis=1, keepdims=True) * e
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    b = np.cross(e, a)
    return a, b


def direct(v, c, s, n_r=48, r_max=14.0):
    xr, wr = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * r_max * (xr + 1)
    wr = 0.5 * r_max * wr
    e, we = sphere_rule(24, 48)
    a, b = frame(e)
    # Angle of w relative to e: cos theta on each half separately, phi uniform.
    xh, wh = np.polynomial.legendre.leggauss(16)
    cth = np.concatenate([0.5 * (xh + 1), -0.5 * (xh + 1)])
    wth = np.concatenate([0.5 * wh, 0.5 * wh])
    n_phi = 32
    phi = (np.arange(n_phi) + 0.5) * 2 * np.pi / n_phi
    wphi = 2 * np.pi / n_phi
    sth = np.sqrt(1 - cth * cth)
    k1 = 0.0
    k2 = 0.0
    smv = sqrt_mu(v)
    for ir in range(n_r):
        u = v[None, :] - r[ir] * e  # (E, 3)
        smu = sqrt_mu(u)
        phu = bump(u, c, s)
        # omega(E, T, P, 3)
        om = (
            cth[None, :, None, None] * e[:, None, None, :]
            + sth[None, :, None, None]
            * (
                np.cos(phi)[None, None, :, None] * a[:, None, None, :]
                + np.sin(phi)[None, None, :, None] * b[:, None, None, :]
            )
        )
        proj = r[ir] * cth[None, :, None]  # (v-u).w
        vp = v[None, None, None, :] - proj[..., None] * om
        up = u[:, None, None, :] + proj[..., None] * om
        gain = sqrt_mu(up) * bump(vp, c, s) + sqrt_mu(vp) * bump(up, c, s)
        bw = np.abs(proj)
        ang2 = np.sum(bw * gain * wth[None, :, None], axis=(1, 2)) * wphi  # (E,)
        ang1 = np.sum(np.abs(cth) * wth) * n_phi * wphi * r[ir]  # int |(v-u).w| dw
        jac = wr[ir] * r[ir] ** 2
        k2 += jac * np.sum(we * smu * ang2)
        k1 += jac * np.sum(we * smv * smu * phu * ang1)
    return k1, k2


def main():
    rows = []
    for _ in range(20):
        v = rng.uniform(-2.0, 2.0, 3)
        c = rng.uniform(-1.0, 1.0, 3)
        s = rng.uniform(0.8, 1.2)
        k1, k2 = direct(v, c, s)
        rows.append((*v, *c, s, k1, k2))
    for row in rows:
        print("    {" + ", ".join(f"{x:.17g}" for x in row) + "},")


if __name__ == "__main__":
    main()
