# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled transform kernels.

Cython twin of ``_transform_py``; same functions, same conventions, same
results. Keep the two files in lockstep (the test suite cross-checks them).
"""

from libc.math cimport sqrt, sin, cos, asin, acos, atan2, fmod, fabs, M_PI

cdef double _DEG = M_PI / 180.0

MAT3_IDENTITY = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)


cdef inline double _norm_deg(double a):
    a = fmod(a, 360.0)
    if a >= 180.0:
        a -= 360.0
    elif a < -180.0:
        a += 360.0
    if a == 180.0:
        a = -180.0
    return a


def norm_angle_deg(double a):
    return _norm_deg(a)


def v_add(a, b):
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def v_sub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def v_scale(a, double s):
    return (a[0] * s, a[1] * s, a[2] * s)


def v_dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


def v_cross(a, b):
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def v_len(a):
    cdef double x = a[0], y = a[1], z = a[2]
    return sqrt(x * x + y * y + z * z)


def v_dist(a, b):
    cdef double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2]
    return sqrt(dx * dx + dy * dy + dz * dz)


def v_normalize(a):
    cdef double x = a[0], y = a[1], z = a[2]
    cdef double n = sqrt(x * x + y * y + z * z)
    if n == 0.0:
        return (0.0, 0.0, 0.0)
    return (x / n, y / n, z / n)


def euler_to_mat3(double yaw, double pitch, double roll):
    cdef double cy = cos(yaw * _DEG), sy = sin(yaw * _DEG)
    cdef double cp = cos(pitch * _DEG), sp = sin(pitch * _DEG)
    cdef double cr = cos(roll * _DEG), sr = sin(roll * _DEG)
    return (
        cy * cr + sy * sp * sr, -cy * sr + sy * sp * cr, sy * cp,
        cp * sr, cp * cr, -sp,
        -sy * cr + cy * sp * sr, sy * sr + cy * sp * cr, cy * cp,
    )


def mat3_to_euler(m):
    cdef double sp = -m[5]
    cdef double yaw, pitch, roll
    if sp > 1.0:
        sp = 1.0
    elif sp < -1.0:
        sp = -1.0
    pitch = asin(sp)
    if fabs(sp) < 1.0 - 1e-9:
        yaw = atan2(m[2], m[8])
        roll = atan2(m[3], m[4])
    elif sp > 0.0:
        yaw = atan2(m[1], m[0])
        roll = 0.0
    else:
        yaw = atan2(-m[1], m[0])
        roll = 0.0
    return (
        _norm_deg(yaw / _DEG),
        _norm_deg(pitch / _DEG),
        _norm_deg(roll / _DEG),
    )


def mat3_mul(a, b):
    cdef double a0 = a[0], a1 = a[1], a2 = a[2], a3 = a[3], a4 = a[4]
    cdef double a5 = a[5], a6 = a[6], a7 = a[7], a8 = a[8]
    cdef double b0 = b[0], b1 = b[1], b2 = b[2], b3 = b[3], b4 = b[4]
    cdef double b5 = b[5], b6 = b[6], b7 = b[7], b8 = b[8]
    return (
        a0 * b0 + a1 * b3 + a2 * b6,
        a0 * b1 + a1 * b4 + a2 * b7,
        a0 * b2 + a1 * b5 + a2 * b8,
        a3 * b0 + a4 * b3 + a5 * b6,
        a3 * b1 + a4 * b4 + a5 * b7,
        a3 * b2 + a4 * b5 + a5 * b8,
        a6 * b0 + a7 * b3 + a8 * b6,
        a6 * b1 + a7 * b4 + a8 * b7,
        a6 * b2 + a7 * b5 + a8 * b8,
    )


def mat3_apply(m, v):
    cdef double x = v[0], y = v[1], z = v[2]
    return (
        m[0] * x + m[1] * y + m[2] * z,
        m[3] * x + m[4] * y + m[5] * z,
        m[6] * x + m[7] * y + m[8] * z,
    )


def mat3_transpose(m):
    return (m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8])


def mat3_inverse(m):
    cdef double m0 = m[0], m1 = m[1], m2 = m[2], m3 = m[3], m4 = m[4]
    cdef double m5 = m[5], m6 = m[6], m7 = m[7], m8 = m[8]
    cdef double c0 = m4 * m8 - m5 * m7
    cdef double c1 = m5 * m6 - m3 * m8
    cdef double c2 = m3 * m7 - m4 * m6
    cdef double det = m0 * c0 + m1 * c1 + m2 * c2
    if det == 0.0:
        raise ZeroDivisionError("singular matrix")
    cdef double inv = 1.0 / det
    return (
        c0 * inv,
        (m2 * m7 - m1 * m8) * inv,
        (m1 * m5 - m2 * m4) * inv,
        c1 * inv,
        (m0 * m8 - m2 * m6) * inv,
        (m2 * m3 - m0 * m5) * inv,
        c2 * inv,
        (m1 * m6 - m0 * m7) * inv,
        (m0 * m4 - m1 * m3) * inv,
    )


def trs_to_affine(position, euler_deg, scale):
    r = euler_to_mat3(euler_deg[0], euler_deg[1], euler_deg[2])
    cdef double sx = scale[0], sy = scale[1], sz = scale[2]
    m = (
        r[0] * sx, r[1] * sy, r[2] * sz,
        r[3] * sx, r[4] * sy, r[5] * sz,
        r[6] * sx, r[7] * sy, r[8] * sz,
    )
    return m, (position[0], position[1], position[2])


def affine_compose(ma, ta, mb, tb):
    return mat3_mul(ma, mb), v_add(mat3_apply(ma, tb), ta)


def affine_apply(m, t, v):
    cdef double x = v[0], y = v[1], z = v[2]
    return (
        m[0] * x + m[1] * y + m[2] * z + t[0],
        m[3] * x + m[4] * y + m[5] * z + t[1],
        m[6] * x + m[7] * y + m[8] * z + t[2],
    )


def affine_invert(m, t):
    mi = mat3_inverse(m)
    ti = mat3_apply(mi, t)
    return mi, (-ti[0], -ti[1], -ti[2])


def axis_angle_to_mat3(axis, double deg):
    n = v_normalize(axis)
    if n == (0.0, 0.0, 0.0):
        return MAT3_IDENTITY
    cdef double a = deg * _DEG
    cdef double c = cos(a), s = sin(a)
    cdef double x = n[0], y = n[1], z = n[2]
    cdef double ic = 1.0 - c
    return (
        c + x * x * ic, x * y * ic - z * s, x * z * ic + y * s,
        x * y * ic + z * s, c + y * y * ic, y * z * ic - x * s,
        x * z * ic - y * s, y * z * ic + x * s, c + z * z * ic,
    )


def mat3_to_axis_angle(m):
    cdef double tr = m[0] + m[4] + m[8]
    cdef double c = (tr - 1.0) * 0.5
    cdef double a, x, y, z, kx, ky, kz
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    kx = m[7] - m[5]
    ky = m[2] - m[6]
    kz = m[3] - m[1]
    a = atan2(0.5 * sqrt(kx * kx + ky * ky + kz * kz), c)
    if a < 1e-12:
        return (0.0, 1.0, 0.0), 0.0
    if a > M_PI - 1e-6:
        x = sqrt(max(0.0, (m[0] + 1.0) * 0.5))
        y = sqrt(max(0.0, (m[4] + 1.0) * 0.5))
        z = sqrt(max(0.0, (m[8] + 1.0) * 0.5))
        if x >= y and x >= z:
            if m[1] + m[3] < 0.0:
                y = -y
            if m[2] + m[6] < 0.0:
                z = -z
        elif y >= x and y >= z:
            if m[1] + m[3] < 0.0:
                x = -x
            if m[5] + m[7] < 0.0:
                z = -z
        else:
            if m[2] + m[6] < 0.0:
                x = -x
            if m[5] + m[7] < 0.0:
                y = -y
        return v_normalize((x, y, z)), a / _DEG
    return v_normalize((kx, ky, kz)), a / _DEG


def aim_euler(direction):
    d = v_normalize(direction)
    if d == (0.0, 0.0, 0.0):
        return (0.0, 0.0, 0.0)
    cdef double yaw = atan2(d[0], d[2]) / _DEG
    cdef double dy = d[1]
    if dy > 1.0:
        dy = 1.0
    elif dy < -1.0:
        dy = -1.0
    cdef double pitch = asin(-dy) / _DEG
    return (_norm_deg(yaw), _norm_deg(pitch), 0.0)


def rotate_about_pivot(point, pivot, axis, double deg):
    m = axis_angle_to_mat3(axis, deg)
    rel = v_sub(point, pivot)
    return v_add(mat3_apply(m, rel), pivot)
