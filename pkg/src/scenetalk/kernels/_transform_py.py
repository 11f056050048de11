"""Pure-Python transform kernels.

Reference implementation of the math used by the scene graph and the
animation stepper. A Cython twin (``_transform_cy``) compiles the same
functions for speed; both must stay byte-for-byte identical in behavior,
so keep any change mirrored.

Conventions (used everywhere in the engine):
  * right-handed frame, Y up, +Z forward, units are meters
  * orientation is yaw-pitch-roll in degrees, composed as
    R = Ry(yaw) @ Rx(pitch) @ Rz(roll)
  * matrices are 3x3, row-major, flat 9-tuples
  * an affine transform is a (mat3, translation) pair with
    mat = R @ diag(scale)
"""

import math

Vec3 = tuple
Mat3 = tuple

MAT3_IDENTITY = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)

_DEG = math.pi / 180.0


def norm_angle_deg(a):
    """Normalize an angle in degrees to [-180, 180)."""
    a = math.fmod(a, 360.0)
    if a >= 180.0:
        a -= 360.0
    elif a < -180.0:
        a += 360.0
    # fmod of tiny negatives can land exactly on 180.0 after the shift
    if a == 180.0:
        a = -180.0
    return a


def v_add(a, b):
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def v_sub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def v_scale(a, s):
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
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def v_dist(a, b):
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    dz = a[2] - b[2]
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def v_normalize(a):
    n = v_len(a)
    if n == 0.0:
        return (0.0, 0.0, 0.0)
    return (a[0] / n, a[1] / n, a[2] / n)


def euler_to_mat3(yaw, pitch, roll):
    """Rotation matrix for yaw-pitch-roll degrees, R = Ry @ Rx @ Rz."""
    cy = math.cos(yaw * _DEG)
    sy = math.sin(yaw * _DEG)
    cp = math.cos(pitch * _DEG)
    sp = math.sin(pitch * _DEG)
    cr = math.cos(roll * _DEG)
    sr = math.sin(roll * _DEG)
    return (
        cy * cr + sy * sp * sr, -cy * sr + sy * sp * cr, sy * cp,
        cp * sr, cp * cr, -sp,
        -sy * cr + cy * sp * sr, sy * sr + cy * sp * cr, cy * cp,
    )


def mat3_to_euler(m):
    """Inverse of euler_to_mat3; returns normalized (yaw, pitch, roll).

    At gimbal lock (pitch = +/-90) roll is fixed to 0 and yaw absorbs the
    free angle, so recomposition still reproduces the matrix.
    """
    sp = -m[5]
    if sp > 1.0:
        sp = 1.0
    elif sp < -1.0:
        sp = -1.0
    pitch = math.asin(sp)
    if abs(sp) < 1.0 - 1e-9:
        yaw = math.atan2(m[2], m[8])
        roll = math.atan2(m[3], m[4])
    elif sp > 0.0:  # pitch = +90
        yaw = math.atan2(m[1], m[0])
        roll = 0.0
    else:  # pitch = -90
        yaw = math.atan2(-m[1], m[0])
        roll = 0.0
    return (
        norm_angle_deg(yaw / _DEG),
        norm_angle_deg(pitch / _DEG),
        norm_angle_deg(roll / _DEG),
    )


def mat3_mul(a, b):
    return (
        a[0] * b[0] + a[1] * b[3] + a[2] * b[6],
        a[0] * b[1] + a[1] * b[4] + a[2] * b[7],
        a[0] * b[2] + a[1] * b[5] + a[2] * b[8],
        a[3] * b[0] + a[4] * b[3] + a[5] * b[6],
        a[3] * b[1] + a[4] * b[4] + a[5] * b[7],
        a[3] * b[2] + a[4] * b[5] + a[5] * b[8],
        a[6] * b[0] + a[7] * b[3] + a[8] * b[6],
        a[6] * b[1] + a[7] * b[4] + a[8] * b[7],
        a[6] * b[2] + a[7] * b[5] + a[8] * b[8],
    )


def mat3_apply(m, v):
    return (
        m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
        m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
        m[6] * v[0] + m[7] * v[1] + m[8] * v[2],
    )


def mat3_transpose(m):
    return (m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8])


def mat3_inverse(m):
    """General 3x3 inverse (adjugate / det). Raises on singular input."""
    c0 = m[4] * m[8] - m[5] * m[7]
    c1 = m[5] * m[6] - m[3] * m[8]
    c2 = m[3] * m[7] - m[4] * m[6]
    det = m[0] * c0 + m[1] * c1 + m[2] * c2
    if det == 0.0:
        raise ZeroDivisionError("singular matrix")
    inv = 1.0 / det
    return (
        c0 * inv,
        (m[2] * m[7] - m[1] * m[8]) * inv,
        (m[1] * m[5] - m[2] * m[4]) * inv,
        c1 * inv,
        (m[0] * m[8] - m[2] * m[6]) * inv,
        (m[2] * m[3] - m[0] * m[5]) * inv,
        c2 * inv,
        (m[1] * m[6] - m[0] * m[7]) * inv,
        (m[0] * m[4] - m[1] * m[3]) * inv,
    )


def trs_to_affine(position, euler_deg, scale):
    """(position, euler, scale) -> (mat, t) with mat = R @ diag(scale)."""
    r = euler_to_mat3(euler_deg[0], euler_deg[1], euler_deg[2])
    sx, sy, sz = scale
    m = (
        r[0] * sx, r[1] * sy, r[2] * sz,
        r[3] * sx, r[4] * sy, r[5] * sz,
        r[6] * sx, r[7] * sy, r[8] * sz,
    )
    return m, (position[0], position[1], position[2])


def affine_compose(ma, ta, mb, tb):
    """Compose parent (ma, ta) with child (mb, tb): first child, then parent."""
    return mat3_mul(ma, mb), v_add(mat3_apply(ma, tb), ta)


def affine_apply(m, t, v):
    return (
        m[0] * v[0] + m[1] * v[1] + m[2] * v[2] + t[0],
        m[3] * v[0] + m[4] * v[1] + m[5] * v[2] + t[1],
        m[6] * v[0] + m[7] * v[1] + m[8] * v[2] + t[2],
    )


def affine_invert(m, t):
    mi = mat3_inverse(m)
    ti = mat3_apply(mi, t)
    return mi, (-ti[0], -ti[1], -ti[2])


def axis_angle_to_mat3(axis, deg):
    """Rodrigues rotation about ``axis`` (normalized here) by ``deg`` degrees."""
    n = v_normalize(axis)
    if n == (0.0, 0.0, 0.0):
        return MAT3_IDENTITY
    a = deg * _DEG
    c = math.cos(a)
    s = math.sin(a)
    x, y, z = n
    ic = 1.0 - c
    return (
        c + x * x * ic, x * y * ic - z * s, x * z * ic + y * s,
        x * y * ic + z * s, c + y * y * ic, y * z * ic - x * s,
        x * z * ic - y * s, y * z * ic + x * s, c + z * z * ic,
    )


def mat3_to_axis_angle(m):
    """Rotation matrix -> (axis, degrees), degrees in [0, 180].

    atan2 of the skew-part norm keeps tiny angles accurate where the
    plain acos form collapses them to zero.
    """
    tr = m[0] + m[4] + m[8]
    c = (tr - 1.0) * 0.5
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    skew = (m[7] - m[5], m[2] - m[6], m[3] - m[1])
    a = math.atan2(0.5 * v_len(skew), c)
    if a < 1e-12:
        return (0.0, 1.0, 0.0), 0.0
    if a > math.pi - 1e-6:
        # antipodal case: axis from the symmetric part
        x = math.sqrt(max(0.0, (m[0] + 1.0) * 0.5))
        y = math.sqrt(max(0.0, (m[4] + 1.0) * 0.5))
        z = math.sqrt(max(0.0, (m[8] + 1.0) * 0.5))
        # fix signs using the largest component
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
    return v_normalize(skew), a / _DEG


def aim_euler(direction):
    """Yaw/pitch (roll 0) turning the +Z forward axis onto ``direction``."""
    d = v_normalize(direction)
    if d == (0.0, 0.0, 0.0):
        return (0.0, 0.0, 0.0)
    yaw = math.atan2(d[0], d[2]) / _DEG
    dy = d[1]
    if dy > 1.0:
        dy = 1.0
    elif dy < -1.0:
        dy = -1.0
    pitch = math.asin(-dy) / _DEG
    return (norm_angle_deg(yaw), norm_angle_deg(pitch), 0.0)


def rotate_about_pivot(point, pivot, axis, deg):
    """Rotate ``point`` around the axis through ``pivot`` by ``deg`` degrees."""
    m = axis_angle_to_mat3(axis, deg)
    rel = v_sub(point, pivot)
    return v_add(mat3_apply(m, rel), pivot)
