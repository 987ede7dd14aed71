"""Independent sympy derivation of the reduced-system constants for two oscillators.

Starts from a Cartesian Hamiltonian that is already in resonant normal form,
rewrites it in (J, psi) with sympy's own trigonometry, substitutes the scaled
unknowns with w = sqrt(z) and reads the linear constants off a series in w.
Nothing here calls the package.
"""
import sympy as sp

x1, x2, x3, x4 = sp.symbols("x1 x2 x3 x4", real=True)
J1, J2, p1, p2 = sp.symbols("J1 J2 psi1 psi2", real=True)


def e2_expr(a=1, b=1):
    a, b = sp.Integer(a), sp.Integer(b)
    quad = x1**2 + x3**2 - sp.Rational(1, 2) * (x2**2 + x4**2)
    cubic = a * (x1 * x2**2 - x1 * x4**2 - 2 * x2 * x3 * x4)
    return quad + cubic + b * (x1**2 + x3**2) ** 2


def k_of_j_psi(H, k):
    """H in (J, psi1) with I = A1^-1 J, theta = A1^T psi; psi2 is set to 0 after checking."""
    k1, k2 = k
    A1 = sp.Matrix([[k1, 0], [-k2, k1]])
    I = A1.inv() * sp.Matrix([J1, J2])
    th = A1.T * sp.Matrix([p1, p2])
    sub = {
        x1: sp.sqrt(2 * I[0]) * sp.cos(th[0]), x3: sp.sqrt(2 * I[0]) * sp.sin(th[0]),
        x2: sp.sqrt(2 * I[1]) * sp.cos(th[1]), x4: sp.sqrt(2 * I[1]) * sp.sin(th[1]),
    }
    K = sp.expand(H.subs(sub))
    dK = sp.diff(K, p2)
    for vals in ({J1: sp.Rational(3, 7), J2: sp.Rational(1, 5), p1: sp.Rational(2, 3), p2: sp.Rational(5, 11)},
                 {J1: sp.Rational(1, 3), J2: sp.Rational(-1, 9), p1: sp.Rational(-1, 2), p2: sp.Rational(7, 3)}):
        assert abs(sp.N(dK.subs(vals), 30)) < 1e-25, "K depends on psi2"
    return sp.simplify(K.subs(p2, 0))


def reduced_constants(H, omega, k, c):
    """Constants (gamma, Gamma, c1, c2, d0, d1, d2, dhat) for N odd (delta = 1/2)."""
    N = sum(k)
    assert N % 2 == 1
    k1 = k[0]
    K = k_of_j_psi(H, k)
    # K0: the part of order N/2 in J that carries psi1
    s = sp.symbols("s", positive=True)
    Ks = sp.expand(K.subs({J1: s * J1, J2: s * J2}))
    K0 = sum(t for t in sp.Add.make_args(Ks) if t.as_coeff_exponent(s)[1] == sp.Rational(N, 2)).subs(s, 1)
    gamma = sp.simplify(sp.diff(K0, p1).subs({J1: 1, J2: 0, p1: c}))
    G = sp.nsimplify(gamma ** sp.Rational(-2, N - 2))

    w, xi1, xih, eta1, etah, C1, C2 = sp.symbols("w xi1 xih eta1 etah C1 C2", real=True)
    sub = {J1: w**2 * (G + xi1), J2: w ** (N + 2) * xih, p1: c + w * (C1 + C2 * w + eta1)}
    Jdot1 = -sp.diff(K, p1).subs(sub)
    psidot1 = sp.diff(K, J1).subs(sub)
    psidot2 = sp.diff(K, J2).subs(sub)
    Omega_h0 = sp.Rational(2, k1 * (N - 2)) * omega[1]
    f_xi1 = w ** (-N) * Jdot1 + G + xi1
    f_eta1 = w ** (1 - N) * psidot1 + C1 / 2 + C2 * w + eta1 / 2
    f_etah = psidot2 - sp.Rational(N - 2, 2) * (Omega_h0 + etah)

    def at0(expr, order):
        e = expr.subs({xi1: 0, xih: 0, eta1: 0, etah: 0})
        return sp.expand(sp.series(sp.simplify(e), w, 0, order + 1).removeO())

    e_eta = at0(f_eta1, 2)
    c1 = sp.solve(sp.Eq(e_eta.coeff(w, 0), 0), C1)[0]
    e_eta = sp.expand(e_eta.subs(C1, c1))
    c2 = sp.solve(sp.Eq(e_eta.coeff(w, 1), 0), C2)[0] if e_eta.coeff(w, 1).has(C2) else sp.Integer(0)
    e_eta = sp.expand(e_eta.subs(C2, c2))
    d1 = -e_eta.coeff(w, 2)
    e_xi = at0(f_xi1.subs({C1: c1, C2: c2}), 2)
    d0 = -e_xi.coeff(w, 2)
    d2_expr = sp.diff(f_eta1.subs({C1: c1, C2: c2}), xi1).subs({xi1: 0, xih: 0, eta1: 0, etah: 0})
    d2 = -sp.limit(sp.simplify(d2_expr), w, 0)
    e_h = at0(f_etah.subs({C1: c1, C2: c2}), 2)
    dhat = -e_h.coeff(w, 2)
    assert sp.simplify(e_h.coeff(w, 0)) == 0
    return {k_: sp.nsimplify(sp.simplify(v)) for k_, v in dict(
        gamma=gamma, Gamma=G, c1=c1, c2=c2, d0=d0, d1=d1, d2=d2, dhat=dhat).items()}
