#!/usr/bin/env python3
"""Derives the thin-dome refraction polynomial and checks the coefficients
hard-coded in core/src/projection.cc.

Units of the dome radius, plane-of-refraction frame: refraction point
m = (x, y) on the unit circle, camera c = (0, d), scene point u = (ux, uy),
eta = mu_air / mu_water.
"""

import sympy as sp

x, y, d, ux, uy, eta = sp.symbols("x y d ux uy eta", real=True)


def cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def derive():
    m = (x, y)
    c = (0, d)
    u = (ux, uy)
    incident = (m[0] - c[0], m[1] - c[1])
    refracted = (u[0] - m[0], u[1] - m[1])
    # eta |m - c| sin(alpha_i) = |u - m| sin(alpha_t), normal n = m, squared.
    lhs = eta**2 * cross(incident, m) ** 2 * (refracted[0] ** 2 + refracted[1] ** 2)
    rhs = cross(refracted, m) ** 2 * (incident[0] ** 2 + incident[1] ** 2)
    relation = sp.expand(lhs - rhs)
    # Eliminate x^2 on the unit circle; what remains is P(y) + x Q(y).
    reduced = sp.expand(sp.rem(relation, x**2 + y**2 - 1, x))
    p = sp.expand(reduced.subs(x, 0))
    q = sp.expand(sp.diff(reduced, x))
    assert sp.expand(p + x * q - reduced) == 0
    return p, q


def library_coefficients():
    d2, e2, ux2, uy2 = d * d, eta * eta, ux * ux, uy * uy
    p = [
        -d2 * e2 * (ux2 + uy2 + 1) + d2 * uy2 + uy2,
        2 * d * uy * (d * e2 - uy),
        d2 * e2 * (ux2 + uy2 + 1) + d2 * (ux2 - uy2) + ux2 - uy2,
        -2 * d * (d * e2 * uy + ux2 - uy2),
    ]
    q = [
        2 * d2 * e2 * ux,
        -2 * ux * uy * (d2 + 1),
        -2 * d * ux * (d * e2 - 2 * uy),
    ]
    return p, q


def main():
    p, q = derive()
    p_lib, q_lib = library_coefficients()
    poly_p = sp.Poly(p, y)
    poly_q = sp.Poly(q, y)
    # The library keeps the relation up to an overall sign.
    sign = None
    for k, expected in enumerate(p_lib):
        derived = poly_p.coeff_monomial(y**k)
        for s in (1, -1):
            if sp.simplify(derived - s * expected) == 0:
                sign = sign or s
        assert sign is not None and sp.simplify(derived - sign * expected) == 0, k
    for k, expected in enumerate(q_lib):
        assert sp.simplify(poly_q.coeff_monomial(y**k) - sign * expected) == 0, k

    sextic = sp.Poly(sp.expand(p**2 - (1 - y**2) * q**2), y)
    print("P(y) + x Q(y) = 0, overall sign", sign)
    for k in range(poly_p.degree() + 1):
        print(f"  p{k} = {sp.factor(sign * poly_p.coeff_monomial(y**k))}")
    for k in range(poly_q.degree() + 1):
        print(f"  q{k} = {sp.factor(sign * poly_q.coeff_monomial(y**k))}")
    print(f"F(y) = P^2 - (1 - y^2) Q^2 has degree {sextic.degree()}")
    print("library coefficients match")


if __name__ == "__main__":
    main()
