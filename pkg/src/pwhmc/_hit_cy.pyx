# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled boundary-hit kernel.

Same algorithm as ``_hit_py.first_hit`` (single exiting-root family
t = arccos(-h/u) - phi + 2*pi*n, lowest-index near-tie breaking), and the
same libm calls, so the two stay bit-identical.  This one exists because
the scan is the inner loop of every trajectory segment.
"""

from libc.math cimport atan2, acos, ceil, fabs, sqrt, INFINITY, isfinite

cdef double TWO_PI = 6.283185307179586476925286766559


def first_hit(const double[::1] fa, const double[::1] fb, const double[::1] h,
              double t_max, double eps_t, double tie_tol):
    """First boundary crossing among m constraints; see _hit_py.first_hit."""
    cdef Py_ssize_t m = fa.shape[0]
    cdef Py_ssize_t i, k
    cdef double u, c, alpha, phi, t0, root, tmin, cutoff

    if m == 0:
        return -1, t_max

    tmin = INFINITY
    for i in range(m):
        root = _root(fa[i], fb[i], h[i], t_max, eps_t)
        if root < tmin:
            tmin = root
    if not isfinite(tmin):
        return -1, t_max

    cutoff = tmin + tie_tol
    for i in range(m):
        root = _root(fa[i], fb[i], h[i], t_max, eps_t)
        if root <= cutoff:
            return i, root
    return -1, t_max        # unreachable: tmin itself passes the cutoff


cdef inline double _root(double fa, double fb, double h,
                         double t_max, double eps_t) nogil:
    """Constraint's first exiting root in (eps_t, t_max], or INFINITY."""
    cdef double u, c, alpha, phi, t0, root
    u = sqrt(fa * fa + fb * fb)     # matches _hit_py exactly; see there
    if u <= fabs(h):
        return INFINITY
    c = -h / u
    if fabs(c) >= 1.0:
        return INFINITY
    alpha = acos(c)
    phi = atan2(-fa, fb)
    t0 = alpha - phi
    root = t0 + TWO_PI * ceil((eps_t - t0) / TWO_PI)
    if root <= eps_t:
        root += TWO_PI
    if root > t_max:
        return INFINITY
    return root
