"""Independent high-precision reference values frozen into the C++ tests.

Run with: python3 tests/oracles/scalar_oracles.py
"""
import mpmath as mp

mp.mp.dps = 30


def transformed_period(delta, period):
    # adaptive quadrature of the clock integrand over one period
    f = lambda t: (1 + delta * mp.sin(2 * mp.pi * t / period)) ** -2
    return mp.quad(f, mp.linspace(0, period, 9))


def collision_frequency(r):
    # 2*pi * E|v - Z|, Z standard normal in R^3, by 2D quadrature in (|u|, cos)
    def inner(s):
        return mp.quad(
            lambda c: mp.sqrt(r * r + s * s - 2 * r * s * c), [-1, 1]
        ) / 2
    dens = lambda s: 4 * mp.pi * s * s * (2 * mp.pi) ** -1.5 * mp.exp(-s * s / 2)
    return 2 * mp.pi * mp.quad(lambda s: dens(s) * inner(s), [0, r, mp.inf] if r > 0 else [0, mp.inf])


def half_flux():
    # int_{v1<0} mu |v1| dv
    return mp.quad(lambda a: a * mp.exp(-a * a / 2), [0, mp.inf]) / mp.sqrt(2 * mp.pi)


def exit_time_quadratic(x, v1, g0):
    # backward path X(tau) = x - v1 tau + g0 tau^2 / 2, smallest positive hit of {0,1}
    roots = []
    for wall in (0, 1):
        a, b, c = g0 / 2, -v1, x - wall
        disc = b * b - 4 * a * c
        if disc < 0:
            continue
        for sgn in (-1, 1):
            tau = (-b + sgn * mp.sqrt(disc)) / (2 * a)
            if tau > 0:
                roots.append((tau, wall))
    return min(roots)


def survival_single_leg(T0):
    # sigma-measure of incoming velocities whose free flight across the slab exceeds T0
    return mp.quad(lambda a: a * mp.exp(-a * a / 2), [0, 1 / mp.mpf(T0)])


if __name__ == "__main__":
    print("Tbar(0.1, 2pi) =", mp.nstr(transformed_period(mp.mpf("0.1"), 2 * mp.pi), 20))
    print("Tbar(0.1, 1)   =", mp.nstr(transformed_period(mp.mpf("0.1"), 1), 20))
    for r in (0, 0.5, 1, 2, 3, 8):
        print(f"nu({r}) =", mp.nstr(collision_frequency(mp.mpf(r)), 20))
    print("nu(8)/(2pi 8) =", mp.nstr(collision_frequency(mp.mpf(8)) / (16 * mp.pi), 12))
    print("weight(3.5,0.5,|v|=2) =", mp.nstr(mp.mpf(5) ** mp.mpf("1.75") * mp.exp(mp.mpf("0.5")), 20))
    print("half flux =", mp.nstr(half_flux(), 20))
    print("exit(0.5,0.05,0.1) =", exit_time_quadratic(mp.mpf("0.5"), mp.mpf("0.05"), mp.mpf("0.1")))
    for T0 in (1, 2, 5, 20):
        print(f"survival({T0}) =", mp.nstr(survival_single_leg(T0), 20))
