"""Landmark index schemes.

Only the 68-point iBUG/300W annotation is registered by default. Roles are named
after the subject's anatomy, so ``right_eye_outer`` (index 36) appears on the
image left of a frontal face. A role maps to one index or to a list of indices
whose centroid defines the role position (eye centers).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import SchemeError


@dataclass(frozen=True)
class Scheme:
    name: str
    count: int | None
    roles: dict = field(default_factory=dict)
    mirror: tuple | None = None

    def check_count(self, m):
        if self.count is not None and m != self.count:
            raise SchemeError(f"scheme {self.name!r} expects {self.count} points, got {m}")


def _ibug68_mirror():
    pairs = [(i, 16 - i) for i in range(8)]
    pairs += [(17, 26), (18, 25), (19, 24), (20, 23), (21, 22)]
    pairs += [(31, 35), (32, 34)]
    pairs += [(36, 45), (37, 44), (38, 43), (39, 42), (40, 47), (41, 46)]
    pairs += [(48, 54), (49, 53), (50, 52), (55, 59), (56, 58)]
    pairs += [(60, 64), (61, 63), (65, 67)]
    perm = list(range(68))
    for a, b in pairs:
        perm[a], perm[b] = b, a
    return tuple(perm)


IBUG68 = Scheme(
    name="ibug68",
    count=68,
    roles={
        "right_eye_outer": 36,
        "left_eye_outer": 45,
        "right_eye_center": [36, 37, 38, 39, 40, 41],
        "left_eye_center": [42, 43, 44, 45, 46, 47],
        "nose_tip": 30,
        "right_mouth_corner": 48,
        "left_mouth_corner": 54,
    },
    mirror=_ibug68_mirror(),
)

# Unconstrained point sets (ad hoc tests, partial models): no count, no roles.
FREE = Scheme(name="free", count=None)

SCHEMES = {s.name: s for s in (IBUG68, FREE)}


def get_scheme(name):
    try:
        return SCHEMES[name]
    except KeyError:
        raise SchemeError(f"unknown landmark scheme {name!r}") from None


def register_scheme(scheme):
    SCHEMES[scheme.name] = scheme
    return scheme


def role_indices(roles, name):
    if name not in roles:
        raise SchemeError(f"role {name!r} is not defined")
    idx = roles[name]
    return np.atleast_1d(np.asarray(idx, dtype=int))
