#!/usr/bin/env python3
"""Reference values for the outlier tests, computed from scratch.

Nothing here imports project code. The block Stieltjes transforms are
obtained by damped fixed-point iteration (with a guarded geometric-series
jump so near-edge points converge in reasonable time), edges by fitting
the squared density flank, outlier roots by bisection, derivatives by an
explicit linear solve that is cross-checked against finite differences.

Run from the repository root:  python3 tests/reference/generate_reference.py
Copy the printed literals into tests/test_outlier.cpp when they change.
"""

import numpy as np


def profile(gamma, alpha, lam_minus, t):
    a = np.exp(-t)
    b = np.exp(-lam_minus * lam_minus * t)
    c = 1.0 - a
    d = (1.0 - b) / lam_minus
    if gamma < 1.0:
        decay = np.array([a, b, 1.0])
        gain = np.array([c, d, 0.0])
        w = np.array([alpha * gamma, (1.0 - alpha) * gamma, 1.0 - gamma])
        f = np.array([1.0 - a, 1.0 - b, 0.0])
    else:
        decay = np.array([a, b])
        gain = np.array([c, d])
        w = np.array([alpha, 1.0 - alpha])
        f = np.array([1.0 - a, 1.0 - b])
    n = len(w)
    sig = np.empty((n, n))
    for p in range(n):
        for q in range(n):
            sig[p, q] = (decay[p] + decay[q]) ** 2 + (gain[p] ** 2 + gain[q] ** 2) / gamma
    return w, sig, f


def solve_g(w, sig, z, tol=1e-13, itmax=500000):
    g = np.full(len(w), 1.0 / z, dtype=complex)
    prev_step = None
    damp = 1.0
    it = 0
    while it < itmax:
        it += 1
        target = 1.0 / (z - sig @ (w * g))
        step = damp * (target - g)
        if prev_step is not None and it % 25 == 0:
            den = np.vdot(prev_step, prev_step)
            if den != 0:
                mu = np.vdot(prev_step, step) / den
                m = abs(mu)
                if 0.5 < m < 1.0 - 1e-14:
                    cand = g + step + step * (mu / (1.0 - mu))
                    if np.all(np.isfinite(cand.real)) and np.all(np.isfinite(cand.imag)) \
                            and np.all(cand.imag <= 0.0):
                        g = cand
                        prev_step = None
                        continue
        g = g + step
        prev_step = step
        res = np.max(np.abs(1.0 / (z - sig @ (w * g)) - g))
        if res < tol:
            return g
    raise RuntimeError(f"no convergence at z={z}")


def forms(w, sig, f, x):
    g = solve_g(w, sig, complex(x))
    assert np.max(np.abs(g.imag)) < 1e-12, "expected a real solution outside the bulk"
    g = g.real
    return w @ g, (w * f) @ g, (w * f * f) @ g


def forms_derivative(w, sig, f, x):
    g = solve_g(w, sig, complex(x)).real
    n = len(w)
    m = np.eye(n) - np.diag(g * g) @ (sig * w[None, :])
    gp = np.linalg.solve(m, -(g * g))
    h = 1e-6
    phi_p, psi_p, chi_p = forms(w, sig, f, x + h)
    phi_m, psi_m, chi_m = forms(w, sig, f, x - h)
    fd = np.array([(phi_p - phi_m) / (2 * h), (psi_p - psi_m) / (2 * h), (chi_p - chi_m) / (2 * h)])
    an = np.array([w @ gp, (w * f) @ gp, (w * f * f) @ gp])
    assert np.max(np.abs(fd - an) / np.maximum(np.abs(an), 1e-12)) < 1e-5, "derivative mismatch"
    return an


def e_plus(w, sig, f, x):
    phi, psi, chi = forms(w, sig, f, x)
    return psi + np.sqrt(max(phi * chi, 0.0))


def rho(w, sig, x, eps):
    g = solve_g(w, sig, complex(x, eps))
    return max(0.0, -(w @ g).imag / np.pi)


def upper_edge(w, sig):
    """Locate L+ by fitting the squared density flank with a cubic."""
    bound = 2.0 * np.sqrt(sig.max()) + 1.0
    xs = np.linspace(0.0, bound, 400)
    vals = np.array([rho(w, sig, x, 1e-4) for x in xs])
    above = np.where(vals > 1e-3)[0]
    rough = xs[above[-1]]
    span = 0.08 * max(1.0, rough)
    flank = np.linspace(rough - span, rough - span / 16.0, 24)
    r2 = np.array([rho(w, sig, x, 1e-6) ** 2 for x in flank])
    coeffs = np.polyfit(flank, r2, 3)
    roots = np.roots(coeffs)
    roots = roots[np.abs(roots.imag) < 1e-8].real
    roots = roots[(roots > flank[-1]) & (roots < flank[-1] + span)]
    return float(roots.min())


def richardson_edge_value(fn, edge, sign):
    deltas = np.array([4e-3, 2e-3, 1e-3])
    ys = np.array([fn(edge + sign * d) for d in deltas])
    v = np.vstack([np.ones(3), np.sqrt(deltas), deltas]).T
    return float(np.linalg.solve(v, ys)[0])


def outlier_root(w, sig, f, theta, lo, hi, tol=1e-12):
    h = lambda x: 1.0 - theta * e_plus(w, sig, f, x)
    assert h(lo) < 0.0 < h(hi), "root not bracketed"
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def overlap(w, sig, f, theta, xi):
    phi, psi, chi = forms(w, sig, f, xi)
    dphi, dpsi, dchi = forms_derivative(w, sig, f, xi)
    num = -(chi * phi * phi + 2.0 * (1.0 / theta - psi) * phi * psi + phi * psi * psi)
    dden = dphi * chi + phi * dchi + 2.0 * (1.0 / theta - psi) * dpsi
    q = num / dden

    # Independent route: residue as the h -> 0 limit of h * N(xi+h) / D(xi+h).
    hs = np.array([1e-3, 5e-4, 2.5e-4])
    rs = []
    for h in hs:
        x = xi + h
        phi_h, psi_h, chi_h = forms(w, sig, f, x)
        n_h = -(chi_h * phi_h ** 2 + 2.0 * (1.0 / theta - psi_h) * phi_h * psi_h + phi_h * psi_h ** 2)
        d_h = phi_h * chi_h - (1.0 / theta - psi_h) ** 2
        rs.append(h * n_h / d_h)
    p = np.polyfit(hs, rs, 2)
    q_lim = np.polyval(p, 0.0)
    assert abs(q - q_lim) < 1e-6, f"residue routes disagree: {q} vs {q_lim}"
    return q


def report(label, gamma, alpha, lam, t, z0, theta):
    w, sig, f = profile(gamma, alpha, lam, t)
    phi, psi, chi = forms(w, sig, f, z0)
    edge = upper_edge(w, sig)
    ep_edge = richardson_edge_value(lambda x: e_plus(w, sig, f, x), edge, +1.0)
    theta_c = 1.0 / ep_edge if ep_edge > 0 else np.inf
    print(f"== {label}: gamma={gamma} alpha={alpha} lambda_minus={lam} t={t}")
    print(f"   forms at z={z0}: phi={phi:.15g} psi={psi:.15g} chi={chi:.15g}")
    print(f"   upper edge ~ {edge:.9g}   theta_c ~ {theta_c:.9g}")
    assert theta > 1.2 * theta_c, "choose theta comfortably above threshold"
    xi = outlier_root(w, sig, f, theta, edge + 1e-4, edge + 2 * theta * (1 + f.max()) + 10)
    q = overlap(w, sig, f, theta, xi)
    print(f"   theta={theta}: xi={xi:.15g} q={q:.15g}")

    # Lower side, same construction below the bulk.
    em_edge = richardson_edge_value(lambda x: e_plus(w, sig, f, x), -edge, -1.0)
    theta_c_low = 1.0 / em_edge if em_edge > 1e-12 else np.inf
    print(f"   lower-side threshold ~ {theta_c_low:.9g}", end="")
    if theta > theta_c_low:
        h = lambda x: 1.0 - theta * e_plus(w, sig, f, x)
        lo, hi = -(- -edge + 2 * theta * (1 + f.max()) + 10), -edge - 1e-4
        lo = -edge - 2 * theta * (1 + f.max()) - 10
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if h(mid) < 0.0:
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-12:
                break
        print(f"   lower xi={0.5 * (lo + hi):.15g}")
    else:
        print("   (no lower outlier at this theta)")


def isotropic_check():
    gamma, alpha, lam, t, theta = 1.5, 0.3, 1.0, 1.2, 1.8
    w, sig, f = profile(gamma, alpha, lam, t)
    assert np.allclose(sig, sig[0, 0]), "isotropic case must collapse"
    s = sig[0, 0]
    fv = f[0]
    theta_hat = 2.0 * theta * fv
    xi_cf = theta_hat + s / theta_hat
    q_cf = 1.0 - s / theta_hat ** 2
    theta_c_cf = np.sqrt(s) / (2.0 * fv)
    edge = upper_edge(w, sig)
    ep = richardson_edge_value(lambda x: e_plus(w, sig, f, x), edge, +1.0)
    xi = outlier_root(w, sig, f, theta, edge + 1e-4, edge + 2 * theta * (1 + fv) + 10)
    q = overlap(w, sig, f, theta, xi)
    print("== isotropic validation (generic route vs closed form)")
    print(f"   sigma={s:.15g} f={fv:.15g}")
    print(f"   edge: fit={edge:.9g} closed={2 * np.sqrt(s):.9g}")
    print(f"   theta_c: generic={1 / ep:.9g} closed={theta_c_cf:.9g}")
    print(f"   xi: generic={xi:.15g} closed={xi_cf:.15g}")
    print(f"   q:  generic={q:.15g} closed={q_cf:.15g}")
    assert abs(xi - xi_cf) < 1e-8
    assert abs(q - q_cf) < 1e-6
    assert abs(1 / ep - theta_c_cf) < 2e-4


if __name__ == "__main__":
    np.set_printoptions(precision=17)
    isotropic_check()
    report("P1 two-block", 1.0, 0.5, 0.1, 10.0, 6.0, 3.0)
    report("P2 three-block", 0.5, 0.5, 0.1, 5.0, 6.0, 4.0)
    report("P3 strong signal (lower side active)", 1.0, 0.5, 0.1, 10.0, 6.0, 12.0)
