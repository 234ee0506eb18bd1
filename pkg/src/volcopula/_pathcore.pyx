# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled step loop for the copula-coupled OU/Euler path simulator.

Semantics must stay in lockstep with ``_pathcore_py.ou_mh_path``; both consume
pre-drawn shock arrays so a path is a pure function of its inputs.

The joint log-variance proposal is one exact OU transition per asset with
innovation correlation ``rho_z``; the proposal's stationary law is then the
Gaussian-copula coupling of the two stationary normals, and reversibility
cancels everything in the Metropolis-Hastings ratio except the ratio of the
target copula density to the Gaussian copula density at the two states.
"""

from libc.math cimport erfc, exp, log, log1p, pow, sqrt, fmin, fmax


cdef inline double _phi(double q) nogil:
    return 0.5 * erfc(-q * 0.7071067811865476)


cdef inline double _clamp01(double u) nogil:
    return fmin(fmax(u, 1e-300), 1.0 - 1e-16)


cdef inline double _logc(int family, double p, double u, double v) nogil:
    cdef double x, y, s, a
    if family == 1:
        x = -log(u)
        y = -log(v)
        if p == 2.0:  # avoid pow on the hot default
            s = x * x + y * y
            a = sqrt(s)
        else:
            s = pow(x, p) + pow(y, p)
            a = pow(s, 1.0 / p)
        return (-a + (p - 1.0) * log(x * y)
                + (1.0 / p - 2.0) * log(s) + log(a + p - 1.0) + x + y)
    # family == 2: Clayton
    s = pow(u, -p) + pow(v, -p) - 1.0
    return log1p(p) - (p + 1.0) * log(u * v) - (2.0 + 1.0 / p) * log(s)


cdef inline double _log_ratio(int family, double p, double rho_z,
                              double q1, double q2) nogil:
    """log of target copula density over Gaussian(rho_z) copula density at the
    z-scores (q1, q2); the additive Gaussian normalizer cancels in MH ratios
    but is kept so cached values are true log ratios."""
    cdef double lg, om
    om = 1.0 - rho_z * rho_z
    lg = -0.5 * log(om) - (rho_z * rho_z * (q1 * q1 + q2 * q2)
                           - 2.0 * rho_z * q1 * q2) / (2.0 * om)
    return _logc(family, p, _clamp01(_phi(q1)), _clamp01(_phi(q2))) - lg


def ou_mh_path(double lv1_0, double lv2_0, double x1_0, double x2_0,
               double phi, double s1, double s2,
               double eta1, double eta2, double sd1, double sd2,
               double mu1_dt, double mu2_dt, double sqdt, double rho,
               int family, double cop_param, double rho_z,
               double[::1] z1, double[::1] z2,
               double[::1] g1, double[::1] g2, double[::1] logu,
               double[::1] out_lv1, double[::1] out_lv2,
               double[::1] out_x1, double[::1] out_x2):
    """Advance both log-variances (correlated exact-OU proposal + MH
    correction) and both log-prices (Euler, left-endpoint variance) through
    ``len(z1)`` steps.  Returns the number of accepted joint proposals.
    """
    cdef Py_ssize_t n = z1.shape[0]
    cdef Py_ssize_t i
    cdef double lv1 = lv1_0, lv2 = lv2_0, x1 = x1_0, x2 = x2_0
    cdef double rt = sqrt(1.0 - rho * rho)
    cdef double rt_z = sqrt(1.0 - rho_z * rho_z)
    cdef double lc = 0.0, lc_new, p1, p2, w1, w2, b1, b2
    cdef long n_accept = 0

    if family != 0:
        lc = _log_ratio(family, cop_param, rho_z,
                        (lv1 - eta1) / sd1, (lv2 - eta2) / sd2)

    out_lv1[0] = lv1
    out_lv2[0] = lv2
    out_x1[0] = x1
    out_x2[0] = x2

    with nogil:
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
                lv1 = p1
                lv2 = p2
                n_accept += 1
            else:
                lc_new = _log_ratio(family, cop_param, rho_z,
                                    (p1 - eta1) / sd1, (p2 - eta2) / sd2)
                if logu[i] <= lc_new - lc:
                    lv1 = p1
                    lv2 = p2
                    lc = lc_new
                    n_accept += 1

            out_lv1[i + 1] = lv1
            out_lv2[i + 1] = lv2
            out_x1[i + 1] = x1
            out_x2[i + 1] = x2

    return n_accept
