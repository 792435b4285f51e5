"""Test bodies and export helpers."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import spaces
from .radial import RadialBody, unit_vectors
from .spaces import DomainError, Geometry, SpaceKind, SuperellipsoidProfile

MAX_DRAWS = 1000
CONVEXITY_GRID = 4096


class RejectionLimit(RuntimeError):
    pass


def normed_plane(p: float = 4.0) -> SpaceKind:
    """Normed plane whose unit disk is the superellipse |x|^p + |y|^p <= 1."""
    return SpaceKind.normed(SuperellipsoidProfile(p=p, blend=1.0), dim=2)


def normed_space_3d(p: float = 4.0, blend: float = 0.5) -> SpaceKind:
    return SpaceKind.normed(SuperellipsoidProfile(p=p, blend=blend), dim=3)


# ---------------------------------------------------------------------------
# 2D bodies from support functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SupportHarmonics2D:
    """Support function h = c0 + sum_{k>=2} a_k cos(k phi) + b_k sin(k phi)."""

    c0: float
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.c0 <= 0:
            raise DomainError("c0 must be positive")
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
        if self.a.shape != self.b.shape:
            raise DomainError("a and b must have the same length")

    @property
    def orders(self) -> np.ndarray:
        return np.arange(2, 2 + self.a.size)

    def evaluate(self, phi) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(h, h', h'')`` at ``phi``."""
        phi = np.asarray(phi, dtype=float)
        k = self.orders
        kp = np.multiply.outer(phi, k)
        c, s = np.cos(kp), np.sin(kp)
        h = self.c0 + c @ self.a + s @ self.b
        h1 = s @ (-k * self.a) + c @ (k * self.b)
        h2 = -(c @ (k**2 * self.a) + s @ (k**2 * self.b))
        return h, h1, h2

    def is_convex(self, n: int = CONVEXITY_GRID) -> bool:
        h, _, h2 = self.evaluate(2 * np.pi * np.arange(n) / n)
        return bool(np.all(h + h2 > 0))

    def boundary(self, phi) -> np.ndarray:
        """Boundary point with outer normal (cos phi, sin phi)."""
        phi = np.asarray(phi, dtype=float)
        h, h1, _ = self.evaluate(phi)
        return self._point(phi, h, h1)

    @staticmethod
    def _point(phi, h, h1) -> np.ndarray:
        n = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        t = np.stack([-np.sin(phi), np.cos(phi)], axis=-1)
        return h[..., None] * n + h1[..., None] * t

    def _initial_inverse(self, psi: np.ndarray) -> np.ndarray:
        # the polar angle of the boundary is increasing in phi; invert a table
        grid = 2 * np.pi * np.arange(513) / 512
        x = self.boundary(grid)
        ang = np.unwrap(np.arctan2(x[:, 1], x[:, 0]))
        ang = ang - 2 * np.pi * np.floor(ang[0] / (2 * np.pi))
        base = ang[0]
        wrapped = base + np.mod(psi - base, 2 * np.pi)
        return np.interp(wrapped, ang, grid)

    def radial(self, psi) -> np.ndarray:
        """Radial function around the origin, by inverting the polar angle of the boundary map."""
        psi = np.asarray(psi, dtype=float)
        phi = self._initial_inverse(psi)
        last = np.inf
        for _ in range(30):
            h, h1, h2 = self.evaluate(phi)
            x = self._point(phi, h, h1)
            err = np.angle(np.exp(1j * (np.arctan2(x[..., 1], x[..., 0]) - psi)))
            worst = np.max(np.abs(err), initial=0.0)
            if worst < 4e-15 or (worst < 1e-12 and worst >= last):
                break
            last = worst
            phi = phi - err * np.sum(x * x, axis=-1) / (h * (h + h2))
        h, h1, _ = self.evaluate(phi)
        return np.linalg.norm(self._point(phi, h, h1), axis=-1)


def draw_harmonics(seed: int, scale: float = 0.5, k_max: int = 6) -> SupportHarmonics2D:
    """Random convex support function; coefficients bounded by scale/(4k^2)."""
    rng = np.random.default_rng(seed)
    k = np.arange(2, k_max + 1)
    bound = scale / (4.0 * k**2)
    for _ in range(MAX_DRAWS):
        a = rng.uniform(-bound, bound)
        b = rng.uniform(-bound, bound)
        sh = SupportHarmonics2D(scale, a, b)
        if sh.is_convex():
            return sh
    raise RejectionLimit(f"no convex draw in {MAX_DRAWS} attempts (seed {seed})")


def body_from_harmonics(space: SpaceKind, sh: SupportHarmonics2D, label: str = "") -> RadialBody:
    if space.dim != 2:
        raise DomainError("2D space required")
    return RadialBody(space=space, radial=sh.radial, label=label)


def random_convex_2d(space: SpaceKind, seed: int, scale: float = 0.5, k_max: int = 6) -> RadialBody:
    """Random smooth convex body around the chart origin; deterministic per seed.

    Spherical bodies are checked to stay well inside the hemisphere around
    their centroid.
    """
    from .integrate import centroid

    sh = draw_harmonics(seed, scale, k_max)
    body = body_from_harmonics(space, sh, label=f"random2d(seed={seed}, scale={scale}, k_max={k_max})")
    if space.geometry is Geometry.HYPERBOLIC:
        extent = np.max(sh.radial(2 * np.pi * np.arange(1024) / 1024))
        if extent >= 1.0:
            raise DomainError("hyperbolic body leaves the ball model; decrease scale")
    if space.geometry is Geometry.SPHERICAL:
        c = centroid(body)
        iso = spaces.center_isometry(space, c)
        pts = iso(body.boundary_points(2 * np.pi * np.arange(1024) / 1024))
        if np.max(np.linalg.norm(pts, axis=-1)) >= np.tan(np.pi / 2 - 0.2):
            raise DomainError("spherical body is too large for its centroid hemisphere; decrease scale")
    return body


# ---------------------------------------------------------------------------
# Closed-form bodies
# ---------------------------------------------------------------------------

def ball(space: SpaceKind, R: float) -> RadialBody:
    if space.dim == 3:
        def radial(theta, phi):
            return np.full(np.broadcast(np.asarray(theta), np.asarray(phi)).shape, float(R))

        def partials(theta, phi):
            z = np.zeros(np.broadcast(np.asarray(theta), np.asarray(phi)).shape)
            return (z + R, z, z, z, z, z)
    else:
        def radial(phi):
            return np.full(np.shape(phi), float(R))

        def partials(phi):
            z = np.zeros(np.shape(phi))
            return (z + R, z, z)
    return RadialBody(space, radial, partials, label=f"ball(R={R})")


def ellipse_2d(a: float, b: float, space: SpaceKind | None = None) -> RadialBody:
    space = space or SpaceKind.euclidean(2)
    return RadialBody(
        space,
        lambda phi: 1.0 / np.sqrt(np.cos(phi) ** 2 / a**2 + np.sin(phi) ** 2 / b**2),
        label=f"ellipse({a}, {b})",
    )


def _ellipsoid_radial(a, b, c, theta, phi):
    ct, st = np.cos(theta), np.sin(theta)
    return 1.0 / np.sqrt((ct * np.cos(phi) / a) ** 2 + (ct * np.sin(phi) / b) ** 2 + (st / c) ** 2)


def ellipsoid_3d(a: float, b: float, c: float, space: SpaceKind | None = None) -> RadialBody:
    space = space or SpaceKind.euclidean()
    return RadialBody(space, lambda t, p: _ellipsoid_radial(a, b, c, t, p), label=f"ellipsoid({a}, {b}, {c})")


def ellipsoid_curvature(a: float, b: float, c: float, x) -> np.ndarray:
    """Gaussian curvature of x^2/a^2 + y^2/b^2 + z^2/c^2 = 1 at surface points ``x``."""
    x = np.asarray(x, dtype=float)
    q = (x[..., 0] / a**2) ** 2 + (x[..., 1] / b**2) ** 2 + (x[..., 2] / c**2) ** 2
    return 1.0 / (a * b * c) ** 2 / q**2


# Low-order perturbation basis: monomials of degree 2 and 3 in the direction.
_MONOMIALS = [
    (2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1),
    (3, 0, 0), (0, 3, 0), (0, 0, 3), (1, 1, 1), (2, 1, 0), (0, 1, 2),
]


def perturbed_ellipsoid_3d(semi_axes, seed: int, amplitude: float, space: SpaceKind | None = None,
                           curvature_grid: tuple[int, int] = (65, 128)) -> RadialBody:
    """Ellipsoid radial function plus ``amplitude`` times a random cubic in the direction.

    Coefficients are normalised so that the perturbation is bounded by
    ``amplitude``. Draws whose boundary is not strictly convex are rejected.
    """
    from .equilibria import min_curvature

    a, b, c = map(float, semi_axes)
    if not a >= b >= c > 0:
        raise DomainError("semi-axes must satisfy a >= b >= c > 0")
    if not 0 <= amplitude < 0.05 * c:
        raise DomainError("amplitude must lie in [0, 0.05 c)")
    space = space or SpaceKind.euclidean()
    rng = np.random.default_rng(seed)
    powers = np.array(_MONOMIALS)
    for _ in range(MAX_DRAWS):
        coef = rng.normal(size=len(_MONOMIALS))
        coef = coef / np.sum(np.abs(coef))

        def radial(theta, phi, coef=coef):
            u = unit_vectors(theta, phi)
            mono = np.prod(u[..., None, :] ** powers, axis=-1)
            return _ellipsoid_radial(a, b, c, theta, phi) + amplitude * (mono @ coef)

        body = RadialBody(space, radial, label=f"perturbed_ellipsoid({a}, {b}, {c}, seed={seed}, amp={amplitude})")
        if amplitude == 0 or min_curvature(body, curvature_grid, polish=False).value > 0:
            return body
    raise RejectionLimit(f"no convex perturbation in {MAX_DRAWS} attempts (seed {seed})")


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def mesh_arrays(body: RadialBody, n_theta: int, n_phi: int, embedded: bool = False):
    """Vertices (chart or embedded) and triangles of a latitude/longitude mesh.

    Vertex 0 is the south pole, the last vertex the north pole, with
    ``n_theta - 1`` rings of ``n_phi`` vertices in between.
    """
    if body.dim != 3:
        raise DomainError("mesh export needs a 3D body")
    if n_theta < 2 or n_phi < 3:
        raise DomainError("need n_theta >= 2 and n_phi >= 3")
    th = -np.pi / 2 + np.pi * np.arange(1, n_theta) / n_theta
    ph = 2 * np.pi * np.arange(n_phi) / n_phi
    T, P = np.meshgrid(th, ph, indexing="ij")
    ring = body.boundary_points(T, P).reshape(-1, 3)
    poles = body.boundary_points(np.array([-np.pi / 2, np.pi / 2]), np.zeros(2))
    verts = np.vstack([poles[:1], ring, poles[1:]])
    if embedded:
        verts = spaces.embed(body.space, verts)[:, :3]

    faces = []
    south, north = 0, len(verts) - 1
    idx = lambda i, j: 1 + i * n_phi + (j % n_phi)  # noqa: E731
    for j in range(n_phi):
        faces.append((south, idx(0, j + 1), idx(0, j)))
    for i in range(n_theta - 2):
        for j in range(n_phi):
            a_, b_, c_, d_ = idx(i, j), idx(i, j + 1), idx(i + 1, j + 1), idx(i + 1, j)
            faces.append((a_, b_, c_))
            faces.append((a_, c_, d_))
    last = n_theta - 2
    for j in range(n_phi):
        faces.append((north, idx(last, j), idx(last, j + 1)))
    return verts, np.array(faces, dtype=int)


def _write_obj(path: Path, verts, faces, comment: str) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(f"# {comment}\n")
            for v in verts:
                fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
            for f in faces:
                fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")
    except OSError as exc:
        raise OSError(f"cannot write mesh to {path}: {exc}") from exc


def export_mesh(body: RadialBody, n_theta: int, n_phi: int, path, embedded_path=None) -> None:
    """Write the chart surface as OBJ; optionally the embedded surface as well.

    For spherical and hyperbolic bodies ``embedded_path`` receives the first
    three of the four coordinates of the embedded surface.
    """
    verts, faces = mesh_arrays(body, n_theta, n_phi)
    _write_obj(Path(path), verts, faces, f"chart surface of {body.label or 'body'} ({body.space.describe()})")
    if embedded_path is not None:
        if not body.space.curved:
            raise DomainError("embedded mesh only exists for spherical/hyperbolic bodies")
        everts, _ = mesh_arrays(body, n_theta, n_phi, embedded=True)
        _write_obj(Path(embedded_path), everts, faces,
                   "EMBEDDED surface, first three of four coordinates (projection, not an isometric image)")


def read_obj(path) -> tuple[np.ndarray, np.ndarray]:
    verts, faces = [], []
    try:
        with open(path) as fh:
            for line in fh:
                parts = line.split()
                if not parts or parts[0].startswith("#"):
                    continue
                if parts[0] == "v":
                    verts.append([float(x) for x in parts[1:4]])
                elif parts[0] == "f":
                    faces.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
    except OSError as exc:
        raise OSError(f"cannot read mesh {path}: {exc}") from exc
    return np.array(verts), np.array(faces, dtype=int)


def mesh_euler_characteristic(faces: np.ndarray) -> int:
    edges = np.sort(np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1)
    n_edges = len(np.unique(edges, axis=0))
    n_verts = len(np.unique(faces))
    return n_verts - n_edges + len(faces)


def mesh_is_watertight(faces: np.ndarray) -> bool:
    """Every undirected edge is shared by exactly two triangles."""
    edges = np.sort(np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1)
    _, counts = np.unique(edges, axis=0, return_counts=True)
    return bool(np.all(counts == 2))


def mesh_radial_gap(verts: np.ndarray, space: SpaceKind, R: float) -> float:
    """Largest |distance from origin - ball radius| over mesh vertices."""
    from .equilibria import ball_geodesic_radius

    return float(np.max(np.abs(spaces.dist_from_origin(space, verts) - ball_geodesic_radius(space, R))))


def write_body_csv(body: RadialBody, path, n_theta: int = 91, n_phi: int = 180) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if body.dim == 2:
            w.writerow(["phi", "radial"])
            ph = 2 * np.pi * np.arange(n_phi) / n_phi
            for p, r in zip(ph, np.linalg.norm(body.boundary_points(ph), axis=-1)):
                w.writerow([repr(float(p)), repr(float(r))])
        else:
            w.writerow(["theta", "phi", "radial"])
            th = np.linspace(-np.pi / 2, np.pi / 2, n_theta)
            ph = 2 * np.pi * np.arange(n_phi) / n_phi
            T, P = np.meshgrid(th, ph, indexing="ij")
            R = np.linalg.norm(body.boundary_points(T, P), axis=-1)
            for t, p, r in zip(T.ravel(), P.ravel(), R.ravel()):
                w.writerow([repr(float(t)), repr(float(p)), repr(float(r))])
