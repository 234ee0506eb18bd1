"""Pure-Python fallback for the path-simulation step loop.

Mirrors ``_pathcore.pyx`` operation for operation (same libm calls in the same
order) so both backends produce identical paths from identical shocks.  It is
roughly two orders of magnitude slower; see ``benchmarks/bench_kernel.py``.
"""

from math import erfc, exp, log, log1p, sqrt

_SQRT1_2 = 0.7071067811865476


def _phi(q):
    return 0.5 * erfc(-q * _SQRT1_2)


def _clamp01(u):
    return min(max(u, 1e-300), 1.0 - 1e-16)


def _logc(family, p, u, v):
    if family == 1:
        x = -log(u)
        y = -log(v)
        if p == 2.0:
            s = x * x + y * y
            a = sqrt(s)
        else:
            s = x**p + y**p
            a = s ** (1.0 / p)
        return -a + (p - 1.0) * log(x * y) + (1.0 / p - 2.0) * log(s) + log(a + p - 1.0) + x + y
    s = u**-p + v**-p - 1.0
    return log1p(p) - (p + 1.0) * log(u * v) - (2.0 + 1.0 / p) * log(s)


def _log_ratio(family, p, rho_z, q1, q2):
    om = 1.0 - rho_z * rho_z
    lg = -0.5 * log(om) - (rho_z * rho_z * (q1 * q1 + q2 * q2) - 2.0 * rho_z * q1 * q2) / (2.0 * om)
    return _logc(family, p, _clamp01(_phi(q1)), _clamp01(_phi(q2))) - lg


def ou_mh_path(lv1_0, lv2_0, x1_0, x2_0,
               phi, s1, s2, eta1, eta2, sd1, sd2,
               mu1_dt, mu2_dt, sqdt, rho, family, cop_param, rho_z,
               z1, z2, g1, g2, logu,
               out_lv1, out_lv2, out_x1, out_x2):
    n = len(z1)
    lv1, lv2, x1, x2 = lv1_0, lv2_0, x1_0, x2_0
    rt = sqrt(1.0 - rho * rho)
    rt_z = sqrt(1.0 - rho_z * rho_z)
    lc = 0.0
    n_accept = 0

    if family != 0:
        lc = _log_ratio(family, cop_param, rho_z, (lv1 - eta1) / sd1, (lv2 - eta2) / sd2)

    out_lv1[0] = lv1
    out_lv2[0] = lv2
    out_x1[0] = x1
    out_x2[0] = x2

    for i in range(n):
        b1 = z1[i]
        b2 = rho_z * z1[i] + rt_z * z2[i]
        w1 = rho * b1 + rt * g1[i]
        w2 = rho * b2 + rt * g2[i]
        x1 = x1 + mu1_dt + exp(0.5 * lv1) * sqdt * w1
        x2 = x2 + mu2_dt + exp(0.5 * lv2) * sqdt * w2

        p1 = eta1 + phi * (lv1 - eta1) + s1 * b1
        p2 = eta2 + phi * (lv2 - eta2) + s2 * b2
        if family == 0:
            lv1, lv2 = p1, p2
            n_accept += 1
        else:
            lc_new = _log_ratio(family, cop_param, rho_z, (p1 - eta1) / sd1, (p2 - eta2) / sd2)
            if logu[i] <= lc_new - lc:
                lv1, lv2, lc = p1, p2, lc_new
                n_accept += 1

        out_lv1[i + 1] = lv1
        out_lv2[i + 1] = lv2
        out_x1[i + 1] = x1
        out_x2[i + 1] = x2

    return n_accept
