"""Transform kernels with a compiled fast path.

Imports the Cython extension when it was built, otherwise the pure-Python
twin. ``SCENETALK_PURE_PYTHON=1`` forces the fallback (useful for
benchmarking and for debugging kernel-level issues).
"""

import os

from . import _transform_py

if os.environ.get("SCENETALK_PURE_PYTHON") == "1":
    _impl = _transform_py
else:
    try:
        from . import _transform_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _transform_py

BACKEND = "compiled" if _impl is not _transform_py else "pure-python"

MAT3_IDENTITY = _impl.MAT3_IDENTITY

norm_angle_deg = _impl.norm_angle_deg
v_add = _impl.v_add
v_sub = _impl.v_sub
v_scale = _impl.v_scale
v_dot = _impl.v_dot
v_cross = _impl.v_cross
v_len = _impl.v_len
v_dist = _impl.v_dist
v_normalize = _impl.v_normalize
euler_to_mat3 = _impl.euler_to_mat3
mat3_to_euler = _impl.mat3_to_euler
mat3_mul = _impl.mat3_mul
mat3_apply = _impl.mat3_apply
mat3_transpose = _impl.mat3_transpose
mat3_inverse = _impl.mat3_inverse
trs_to_affine = _impl.trs_to_affine
affine_compose = _impl.affine_compose
affine_apply = _impl.affine_apply
affine_invert = _impl.affine_invert
axis_angle_to_mat3 = _impl.axis_angle_to_mat3
mat3_to_axis_angle = _impl.mat3_to_axis_angle
aim_euler = _impl.aim_euler
rotate_about_pivot = _impl.rotate_about_pivot
