"""Riemann-sphere geometry: stereographic projection, metric, isometries.

The extended plane is identified with the unit sphere in R^3.  Convention
fixed here (and relied on by tests): 0 maps to the south pole (0, 0, -1),
infinity to the north pole (0, 0, 1), consistent with the chordal distance

    d(z, w) = 2|z - w| / (sqrt(1+|z|^2) sqrt(1+|w|^2)),
    d(z, inf) = 2 / sqrt(1+|z|^2).

Isometries are the Mobius maps tau(z) = (alpha z + beta)/(conj(alpha) -
conj(beta) z) with |alpha|^2 + |beta|^2 = 1.  The point at infinity is an
explicit sentinel (`INF`), never a float inf, so distance formulas stay
NaN-free.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "INF",
    "SpherePoint",
    "Isometry",
    "SphericalConfiguration",
    "spherical_distance",
    "project",
    "unproject",
    "project_many",
    "apply_isometry",
    "sample_mu",
    "mu_density",
    "random_isometry",
    "read_point_file",
]


class _PointAtInfinity:
    """Sentinel for the north pole in planar coordinates."""

    __slots__ = ()

    def __repr__(self):
        return "INF"


INF = _PointAtInfinity()


def is_infinity(z) -> bool:
    return z is INF or isinstance(z, _PointAtInfinity)


@dataclass(frozen=True)
class SpherePoint:
    """A sphere point carrying both planar and unit 3-vector coordinates."""

    planar: object  # complex or INF
    cartesian: tuple[float, float, float]

    @property
    def xyz(self) -> np.ndarray:
        return np.array(self.cartesian)


def project(z) -> SpherePoint:
    """Plane (or INF) to the unit sphere."""
    if is_infinity(z):
        return SpherePoint(INF, (0.0, 0.0, 1.0))
    z = complex(z)
    # x = 2 Re z / (1+|z|^2), y = 2 Im z / (1+|z|^2), t = (|z|^2-1)/(|z|^2+1);
    # written via 1/(1+|z|^2) once so |z| ~ 1e8 does not overflow the square
    a2 = z.real * z.real + z.imag * z.imag
    if a2 > 1e300:
        return SpherePoint(z, (0.0, 0.0, 1.0))
    s = 1.0 / (1.0 + a2)
    return SpherePoint(z, (2.0 * z.real * s, 2.0 * z.imag * s, (a2 - 1.0) * s))


def unproject(p: SpherePoint):
    if is_infinity(p.planar):
        return INF
    return complex(p.planar)


def cartesian_to_planar(x: float, y: float, t: float):
    r2 = x * x + y * y
    if r2 == 0.0 and t > 0.0:
        return INF
    if t <= 0.0:
        return complex(x, y) / (1.0 - t)
    # near the north pole 1 - t cancels; use 1 - t = (x^2 + y^2)/(1 + t)
    return complex(x, y) * (1.0 + t) / r2


def project_many(zs: np.ndarray) -> np.ndarray:
    """Vector form of `project` for finite planar points: (m,) -> (m, 3)."""
    zs = np.asarray(zs, dtype=np.complex128)
    a2 = zs.real**2 + zs.imag**2
    s = 1.0 / (1.0 + a2)
    out = np.empty(zs.shape + (3,))
    out[..., 0] = 2.0 * zs.real * s
    out[..., 1] = 2.0 * zs.imag * s
    out[..., 2] = (a2 - 1.0) * s
    return out


def spherical_distance(z, w) -> float:
    """Chordal distance on the sphere, in [0, 2].

    For large moduli the planar formula divides two huge numbers; those
    cases go through the 3D projected coordinates instead, which stay O(1).
    """
    zi, wi = is_infinity(z), is_infinity(w)
    if zi and wi:
        return 0.0
    if zi or wi:
        f = w if zi else z
        f = complex(f)
        return 2.0 / np.sqrt(1.0 + abs(f) ** 2)
    z, w = complex(z), complex(w)
    if abs(z) > 1.0 or abs(w) > 1.0:
        pz = np.array(project(z).cartesian)
        pw = np.array(project(w).cartesian)
        return float(np.linalg.norm(pz - pw))
    return 2.0 * abs(z - w) / np.sqrt((1.0 + abs(z) ** 2) * (1.0 + abs(w) ** 2))


@dataclass(frozen=True)
class Isometry:
    """Sphere rotation as a Mobius map; |alpha|^2 + |beta|^2 = 1."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {norm}, expected 1")

    def inverse(self) -> "Isometry":
        # tau^{-1} corresponds to (conj(alpha), -beta)
        return Isometry(np.conj(self.alpha), -self.beta)

    def __call__(self, z):
        return apply_isometry(self, z)


IDENTITY = Isometry(1.0 + 0.0j, 0.0j)


def apply_isometry(t: Isometry, z):
    """tau(z) = (alpha z + beta)/(conj(alpha) - conj(beta) z); pole -> INF."""
    a, b = complex(t.alpha), complex(t.beta)
    if is_infinity(z):
        if b == 0:
            return INF
        num, den = a, -np.conj(b)
    else:
        z = complex(z)
        num = a * z + b
        den = np.conj(a) - np.conj(b) * z
    if den == 0:
        return INF
    return num / den


def random_isometry(stream) -> Isometry:
    """(alpha, beta) uniform on the unit 3-sphere in C^2 (Haar rotation)."""
    rng = stream.generator() if hasattr(stream, "generator") else stream
    v = rng.standard_normal(4)
    v /= np.linalg.norm(v)
    return Isometry(complex(v[0], v[1]), complex(v[2], v[3]))


def mu_density(z) -> float:
    """Density of the uniform sphere probability measure wrt planar Lebesgue."""
    if is_infinity(z):
        return 0.0
    a2 = abs(complex(z)) ** 2
    return 1.0 / (np.pi * (1.0 + a2) ** 2)


def sample_mu(stream, size=None):
    """Planar coordinates of uniform points on the sphere.

    |z|^2/(1+|z|^2) is uniform on [0, 1] under mu, so |z| = sqrt(u/(1-u)).
    """
    rng = stream.generator() if hasattr(stream, "generator") else stream
    m = 1 if size is None else int(size)
    u = rng.random(m)
    r = np.sqrt(u / (1.0 - u))
    phi = rng.random(m) * 2.0 * np.pi
    z = r * np.exp(1j * phi)
    if size is None:
        return complex(z[0])
    return z


@dataclass(frozen=True)
class SphericalConfiguration:
    """n points on the sphere with a provenance tag."""

    points: tuple[SpherePoint, ...]
    source: str = "explicit"

    def __post_init__(self):
        if self.source not in ("roots", "uniform", "refined", "explicit"):
            raise ValueError(f"unknown source tag {self.source!r}")
        for p in self.points:
            if not np.all(np.isfinite(p.cartesian)):
                raise ValueError("configuration contains non-finite coordinates")

    def __len__(self):
        return len(self.points)

    @property
    def cartesian(self) -> np.ndarray:
        return np.array([p.cartesian for p in self.points])

    @classmethod
    def from_planar(cls, zs, source="explicit") -> "SphericalConfiguration":
        return cls(tuple(project(z) for z in zs), source)

    @classmethod
    def from_cartesian(cls, xyz, source="explicit") -> "SphericalConfiguration":
        xyz = np.asarray(xyz, dtype=float)
        pts = []
        for row in xyz:
            norm = np.linalg.norm(row)
            if not np.isfinite(norm) or norm == 0:
                raise ValueError(f"invalid cartesian point {row}")
            row = row / norm
            pts.append(SpherePoint(cartesian_to_planar(*row), tuple(row)))
        return cls(tuple(pts), source)

    def transform(self, t: Isometry) -> "SphericalConfiguration":
        return SphericalConfiguration.from_planar(
            [apply_isometry(t, p.planar) for p in self.points], self.source
        )


def read_point_file(path) -> SphericalConfiguration:
    """Read an explicit point set from JSON.

    Accepts {"points": [...]} where each entry is either [re, im] (planar)
    or [x, y, z] (cartesian, normalized on read).
    """
    with open(path) as fh:
        payload = json.load(fh)
    rows = payload["points"] if isinstance(payload, dict) else payload
    pts = []
    for row in rows:
        if len(row) == 2:
            pts.append(project(complex(row[0], row[1])))
        elif len(row) == 3:
            cfg = SphericalConfiguration.from_cartesian([row])
            pts.append(cfg.points[0])
        else:
            raise ValueError(f"point rows must have 2 or 3 entries, got {row}")
    return SphericalConfiguration(tuple(pts), "explicit")
