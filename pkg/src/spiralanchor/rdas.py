"""Explicit finite-difference simulator for a modified FitzHugh-Nagumo
reaction-diffusion-advection system on a square with no-flux boundaries,
plus spiral-tip tracking by isoline intersection.

The fields obey

    u_t = (1/sigma)(u - u^3/3 - v) + c_phi * phi2 + lap(u) + a1 * u_x1
    v_t = sigma * (u + beta - gamma*v + phi2)

on [-L, L]^2, stepped with the explicit midpoint rule on a 5-point Laplacian.
phi is a radial bump of amplitude `bump_amplitude` centred at `bump_center`;
phi2 is either phi itself (default) or its x2-derivative, selectable because
the source text is ambiguous about the subscript (see README).  The tip is
the intersection of the u = u* and v = v* isolines, extracted per grid cell
by marching squares.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BlowUpError, ConfigurationError

SNAPSHOT_MAGIC = b"RDAS"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIIdd")  # magic, version, N, step, h, t  (32 bytes)


@dataclass(frozen=True)
class Field2D:
    """Real scalar field on a uniform square grid; values[i, j] samples the
    point (x1_0 + i*h, x2_0 + j*h)."""

    values: np.ndarray
    h: float
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 3:
            raise ConfigurationError("field must be square with at least 3 points per side")
        if not np.all(np.isfinite(arr)):
            raise ConfigurationError("field values must be finite")
        if not self.h > 0:
            raise ConfigurationError("grid spacing must be positive")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def n(self):
        return self.values.shape[0]

    def x1(self):
        return self.origin[0] + self.h * np.arange(self.n)

    def x2(self):
        return self.origin[1] + self.h * np.arange(self.n)

    def meshgrid(self):
        return np.meshgrid(self.x1(), self.x2(), indexing="ij")


@dataclass(frozen=True)
class RdasConfig:
    """Simulation configuration; the defaults reproduce the anchoring
    experiment (advection on, bump on, 200-point grid)."""

    L: float = 30.0
    N: int = 200
    dt: float = 0.005
    varsigma: float = 0.3
    beta: float = 0.6
    gamma: float = 0.5
    a1: float = 0.002
    c_phi: float = -3.0 * math.sqrt(2.0) * math.sin(0.03 * math.pi / 2.0)
    bump_amplitude: float = 0.12
    bump_decay: float = 0.00086
    bump_center: tuple = (-10.0, 5.0 * math.sqrt(3.0))
    phi_mode: str = "value"
    t_end: float = 400.0
    record_stride: int = 20
    tip_u: float = 0.0
    tip_v: float = None
    init_cross: tuple = (0.0, 0.0)
    init_v_excited: float = 0.45
    advection_boundary: str = "one-sided"
    laplacian_ghost: str = "face"
    snapshot_stride: int = 0

    def __post_init__(self):
        if self.N < 3 or self.L <= 0 or self.dt <= 0:
            raise ConfigurationError("N, L, dt must be positive (N >= 3)")
        if self.phi_mode not in ("value", "x2-derivative"):
            raise ConfigurationError(f"unknown phi_mode {self.phi_mode!r}")
        if self.advection_boundary not in ("one-sided", "mirror"):
            raise ConfigurationError(f"unknown advection_boundary {self.advection_boundary!r}")
        if self.laplacian_ghost not in ("face", "node"):
            raise ConfigurationError(f"unknown laplacian_ghost {self.laplacian_ghost!r}")
        if self.record_stride < 1:
            raise ConfigurationError("record_stride must be >= 1")

    @property
    def h(self):
        # both boundaries are grid points
        return 2.0 * self.L / (self.N - 1)

    @property
    def steps(self):
        return int(round(self.t_end / self.dt))

    @property
    def cfl_number(self):
        """dt * (4/h^2 + |a1|/h); values >= 1 are flagged as unstable."""
        return self.dt * (4.0 / self.h**2 + abs(self.a1) / self.h)

    @property
    def cfl_ok(self):
        return self.cfl_number < 1.0

    def blank_field(self, fill=0.0):
        vals = np.full((self.N, self.N), float(fill))
        return Field2D(vals, self.h, (-self.L, -self.L))


# ---------------------------------------------------------------------------
# Stencils


def _ghost_pad(f, ghost):
    """Pad by one ghost layer: 'face' mirrors across the boundary face
    (ghost = boundary value; zero-flux, exactly conservative), 'node'
    mirrors across the boundary node (ghost = first interior neighbour)."""
    mode = "edge" if ghost == "face" else "reflect"
    return np.pad(f, 1, mode=mode)


def laplacian5(f, ghost="face"):
    """5-point Laplacian with no-flux ghosts (see _ghost_pad for the two
    ghost conventions)."""
    p = _ghost_pad(f.values, ghost)
    lap = p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4.0 * f.values
    return Field2D(lap / f.h**2, f.h, f.origin)


def ddx1(f, boundary="mirror"):
    """Central difference along x1; 'mirror' forces zero normal derivative
    at the two x1 boundaries, 'one-sided' uses forward/backward differences
    there (preferred for a transport term)."""
    out = np.empty_like(f.values)
    out[1:-1, :] = (f.values[2:, :] - f.values[:-2, :]) / (2.0 * f.h)
    if boundary == "mirror":
        out[0, :] = 0.0
        out[-1, :] = 0.0
    else:
        out[0, :] = (f.values[1, :] - f.values[0, :]) / f.h
        out[-1, :] = (f.values[-1, :] - f.values[-2, :]) / f.h
    return Field2D(out, f.h, f.origin)


def _ddx2_mirror(values, h):
    out = np.empty_like(values)
    out[:, 1:-1] = (values[:, 2:] - values[:, :-2]) / (2.0 * h)
    out[:, 0] = 0.0
    out[:, -1] = 0.0
    return out


# ---------------------------------------------------------------------------
# Model pieces


def bump_value(cfg, x1, x2):
    """The inhomogeneity bump phi evaluated at arbitrary coordinates."""
    cx, cy = cfg.bump_center
    return cfg.bump_amplitude * np.exp(
        -cfg.bump_decay * ((np.asarray(x1) - cx) ** 2 + (np.asarray(x2) - cy) ** 2)
    )


def build_phi(cfg):
    """Sample phi on the grid and derive the term phi2 that enters the
    right-hand sides (phi itself, or its x2-derivative)."""
    base = cfg.blank_field()
    xx1, xx2 = base.meshgrid()
    phi = Field2D(bump_value(cfg, xx1, xx2), cfg.h, base.origin)
    if cfg.phi_mode == "value":
        term = phi
    else:
        term = Field2D(_ddx2_mirror(phi.values, cfg.h), cfg.h, base.origin)
    return phi, term


def rest_state(cfg):
    """Spatially uniform equilibrium (u0, v0): the intersection of
    u - u^3/3 - v = 0 and u + beta - gamma*v = 0, solved by bisection on the
    cubic in u to 1e-12."""

    def resid(u):
        return u - u**3 / 3.0 - (u + cfg.beta) / cfg.gamma

    lo, hi = -10.0, 10.0
    grid = np.linspace(lo, hi, 2001)
    vals = resid(grid)
    sign_change = np.nonzero(np.diff(np.signbit(vals)))[0]
    if sign_change.size == 0:
        raise ConfigurationError("no rest state found for these reaction parameters")
    a, b = grid[sign_change[0]], grid[sign_change[0] + 1]
    for _ in range(200):
        mid = 0.5 * (a + b)
        if b - a < 1e-12:
            break
        if np.signbit(resid(a)) == np.signbit(resid(mid)):
            a = mid
        else:
            b = mid
    u0 = 0.5 * (a + b)
    return u0, (u0 + cfg.beta) / cfg.gamma


def excited_u(cfg, v0):
    """Right branch of u - u^3/3 = v0 (the excited plateau)."""

    def resid(u):
        return u - u**3 / 3.0 - v0

    a, b = 1.0, 6.0
    if resid(a) * resid(b) > 0:
        raise ConfigurationError("no excited branch for this rest state")
    for _ in range(200):
        mid = 0.5 * (a + b)
        if b - a < 1e-12:
            break
        if np.signbit(resid(a)) == np.signbit(resid(mid)):
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def init_spiral(cfg):
    """Cross-field spiral initiation: u excited on the half plane
    x2 > cross_x2, v ramped linearly in x1 from rest toward a refractory
    level so the planar front breaks and curls around the cross point."""
    u0, v0 = rest_state(cfg)
    ue = excited_u(cfg, v0)
    base = cfg.blank_field()
    x1 = base.x1()
    x2 = base.x2()
    u = np.full((cfg.N, cfg.N), u0)
    u[:, x2 > cfg.init_cross[1]] = ue
    frac = np.clip((x1 - cfg.init_cross[0] + cfg.L) / (2.0 * cfg.L), 0.0, 1.0)
    v = np.repeat((v0 + (cfg.init_v_excited - v0) * frac)[:, None], cfg.N, axis=1)
    return (
        Field2D(u, cfg.h, base.origin),
        Field2D(v, cfg.h, base.origin),
    )


class _Stepper:
    """Preallocated buffers for the explicit midpoint step."""

    def __init__(self, cfg, phi_term, reaction=True, forcing=True, advection=True, diffusion=True):
        self.cfg = cfg
        self.phi2 = phi_term
        self.reaction = reaction
        self.forcing = forcing
        self.advection = advection
        self.diffusion = diffusion
        n = cfg.N
        self._pad = np.zeros((n + 2, n + 2))
        self._mid_u = np.empty((n, n))
        self._mid_v = np.empty((n, n))
        self._k_u = np.empty((n, n))
        self._k_v = np.empty((n, n))

    def _fill_ghost(self, f):
        p = self._pad
        p[1:-1, 1:-1] = f
        if self.cfg.laplacian_ghost == "face":
            p[0, 1:-1] = f[0]
            p[-1, 1:-1] = f[-1]
            p[1:-1, 0] = f[:, 0]
            p[1:-1, -1] = f[:, -1]
        else:
            p[0, 1:-1] = f[1]
            p[-1, 1:-1] = f[-2]
            p[1:-1, 0] = f[:, 1]
            p[1:-1, -1] = f[:, -2]
        return p

    def rates(self, u, v, out_u, out_v):
        cfg = self.cfg
        if self.diffusion:
            p = self._fill_ghost(u)
            np.add(p[:-2, 1:-1], p[2:, 1:-1], out=out_u)
            out_u += p[1:-1, :-2]
            out_u += p[1:-1, 2:]
            out_u -= 4.0 * u
            out_u *= 1.0 / cfg.h**2
        else:
            out_u.fill(0.0)
        if self.advection and cfg.a1 != 0.0:
            scale = cfg.a1 / (2.0 * cfg.h)
            out_u[1:-1, :] += scale * (u[2:, :] - u[:-2, :])
            if cfg.advection_boundary == "one-sided":
                out_u[0, :] += (cfg.a1 / cfg.h) * (u[1, :] - u[0, :])
                out_u[-1, :] += (cfg.a1 / cfg.h) * (u[-1, :] - u[-2, :])
        if self.reaction:
            out_u += (u - u * u * u / 3.0 - v) / cfg.varsigma
            np.multiply(v, -cfg.gamma, out=out_v)
            out_v += u
            out_v += cfg.beta
            if self.forcing:
                out_v += self.phi2
            out_v *= cfg.varsigma
        else:
            out_v.fill(0.0)
        if self.forcing:
            out_u += cfg.c_phi * self.phi2

    def step(self, u, v):
        """One explicit midpoint step in place; returns (u, v) new arrays."""
        dt = self.cfg.dt
        self.rates(u, v, self._k_u, self._k_v)
        np.multiply(self._k_u, 0.5 * dt, out=self._mid_u)
        self._mid_u += u
        np.multiply(self._k_v, 0.5 * dt, out=self._mid_v)
        self._mid_v += v
        self.rates(self._mid_u, self._mid_v, self._k_u, self._k_v)
        u_new = u + dt * self._k_u
        v_new = v + dt * self._k_v
        return u_new, v_new


def rk2_step(u, v, cfg, reaction=True, forcing=True, advection=True, diffusion=True):
    """One explicit midpoint (RK2) step of size cfg.dt on Field2D pairs.

    The reaction/forcing/advection/diffusion switches are test hooks for
    isolating individual terms.
    """
    if u.values.shape != v.values.shape:
        raise ConfigurationError("u and v must share a grid")
    _, phi_term = build_phi(cfg)
    stepper = _Stepper(
        cfg, phi_term.values, reaction=reaction, forcing=forcing, advection=advection, diffusion=diffusion
    )
    un, vn = stepper.step(u.values, v.values)
    if not (np.all(np.isfinite(un)) and np.all(np.isfinite(vn))):
        raise BlowUpError("non-finite field values after one step")
    return Field2D(un, cfg.h, u.origin), Field2D(vn, cfg.h, v.origin)


# ---------------------------------------------------------------------------
# Tip tracking

_EDGES = ((0, 1), (1, 2), (2, 3), (3, 0))  # corner pairs, counter-clockwise


def _cell_segments(corner_vals, corner_xy):
    """Marching-squares segments of the zero isoline inside one cell."""
    crossings = {}
    for e, (ia, ib) in enumerate(_EDGES):
        fa, fb = corner_vals[ia], corner_vals[ib]
        if (fa > 0.0) != (fb > 0.0):
            t = fa / (fa - fb)
            ax, ay = corner_xy[ia]
            bx, by = corner_xy[ib]
            crossings[e] = (ax + t * (bx - ax), ay + t * (by - ay))
    edges = sorted(crossings)
    if len(edges) == 2:
        return [(crossings[edges[0]], crossings[edges[1]])]
    if len(edges) == 4:
        # saddle: resolve the pairing with the cell-centre sample
        centre = 0.25 * sum(corner_vals)
        if (centre > 0.0) == (corner_vals[0] > 0.0):
            pairs = ((0, 1), (2, 3))
        else:
            pairs = ((1, 2), (3, 0))
        return [(crossings[a], crossings[b]) for a, b in pairs]
    return []


def _segment_intersection(s1, s2):
    (ax, ay), (bx, by) = s1
    (cx, cy), (dx, dy) = s2
    r = (bx - ax, by - ay)
    s = (dx - cx, dy - cy)
    denom = r[0] * s[1] - r[1] * s[0]
    if abs(denom) < 1e-300:
        return None
    qp = (cx - ax, cy - ay)
    t = (qp[0] * s[1] - qp[1] * s[0]) / denom
    w = (qp[0] * r[1] - qp[1] * r[0]) / denom
    if -1e-12 <= t <= 1.0 + 1e-12 and -1e-12 <= w <= 1.0 + 1e-12:
        return (ax + t * r[0], ay + t * r[1])
    return None


def tip_locate(u, v, u_star=0.0, v_star=0.0, prev=None):
    """Intersection of the u = u* and v = v* isolines.

    Candidate cells (where both fields change sign) are processed in scan
    order; with several intersections the one nearest `prev` wins, and with
    no previous tip the first found is returned.  None means no tip.
    """
    du = u.values - u_star
    dv = v.values - v_star
    u00, u10, u01, u11 = du[:-1, :-1], du[1:, :-1], du[:-1, 1:], du[1:, 1:]
    v00, v10, v01, v11 = dv[:-1, :-1], dv[1:, :-1], dv[:-1, 1:], dv[1:, 1:]
    upos = (u00 > 0).astype(np.int8) + (u10 > 0) + (u01 > 0) + (u11 > 0)
    vpos = (v00 > 0).astype(np.int8) + (v10 > 0) + (v01 > 0) + (v11 > 0)
    cells = np.argwhere((upos % 4 != 0) & (vpos % 4 != 0))
    if cells.size == 0:
        return None
    x0, y0 = u.origin
    h = u.h
    found = []
    for i, j in cells:
        xy = (
            (x0 + i * h, y0 + j * h),
            (x0 + (i + 1) * h, y0 + j * h),
            (x0 + (i + 1) * h, y0 + (j + 1) * h),
            (x0 + i * h, y0 + (j + 1) * h),
        )
        segs_u = _cell_segments((du[i, j], du[i + 1, j], du[i + 1, j + 1], du[i, j + 1]), xy)
        if not segs_u:
            continue
        segs_v = _cell_segments((dv[i, j], dv[i + 1, j], dv[i + 1, j + 1], dv[i, j + 1]), xy)
        for su in segs_u:
            for sv in segs_v:
                pt = _segment_intersection(su, sv)
                if pt is not None:
                    found.append(pt)
    if not found:
        return None
    if prev is None:
        return found[0]
    px, py = prev
    return min(found, key=lambda q: (q[0] - px) ** 2 + (q[1] - py) ** 2)


# ---------------------------------------------------------------------------
# Full runs


@dataclass(frozen=True)
class TipPath:
    """Tip samples (t, x1, x2) at the recorded steps where a tip existed."""

    steps: np.ndarray
    samples: np.ndarray  # columns t, x1, x2
    loop_center: tuple = None

    def to_csv(self, path=None):
        lines = ["step,t,x1,x2"]
        for k, (t, x, y) in zip(self.steps, self.samples):
            lines.append(f"{int(k)},{t!r},{x!r},{y!r}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


@dataclass(frozen=True)
class RdasResult:
    tip_path: TipPath
    u: Field2D
    v: Field2D
    loop_center: tuple
    revolution_centers: list
    lost_spiral: bool
    missing_late_fraction: float
    steps_run: int


def revolution_centers(points, max_revolutions=None):
    """Mean tip position over each full revolution, newest last.

    A revolution is one full turn of the winding angle of the tip about the
    running mean position; turns are counted backward from the final sample.
    """
    pts = np.asarray(points, dtype=complex)
    if pts.size < 8:
        return []
    running = np.cumsum(pts) / np.arange(1, pts.size + 1)
    rel = pts - running
    mag = np.abs(rel)
    good = mag > 1e-12
    if not np.all(good):
        # winding is undefined exactly at the mean; nudge those samples
        rel = np.where(good, rel, 1e-12)
    wind = np.unwrap(np.angle(rel)) / (2.0 * math.pi)
    end = wind[-1]
    boundaries = [pts.size - 1]
    r = 1
    for i in range(pts.size - 2, -1, -1):
        if abs(wind[i] - end) >= r:
            boundaries.append(i)
            r += 1
            if max_revolutions is not None and r > max_revolutions:
                break
    if len(boundaries) < 2:
        return []
    centers = []
    for a, b in zip(boundaries[1:], boundaries[:-1]):
        seg = pts[a : b + 1]
        centers.append((float(seg.real.mean()), float(seg.imag.mean())))
    centers.reverse()
    return centers


def run(cfg, resume=None, snapshot_sink=None, progress=None):
    """Integrate to t_end, recording the tip every record_stride steps.

    `resume` may be a (u Field2D, v Field2D, step) triple, e.g. from
    read_snapshot.  `snapshot_sink(step, u, v)` is called every
    cfg.snapshot_stride steps when that stride is set.  Returns an
    RdasResult whose loop_center is the mean tip position over the final
    detected revolution.  A missing tip in more than 10% of late-time
    samples sets lost_spiral (with a warning) rather than raising.
    """
    if not cfg.cfl_ok:
        warnings.warn(
            f"CFL number {cfg.cfl_number:.3f} >= 1; the explicit scheme may be unstable",
            stacklevel=2,
        )
    _, v0 = rest_state(cfg)
    tip_v = cfg.tip_v if cfg.tip_v is not None else v0
    _, phi_term = build_phi(cfg)
    if resume is None:
        uf, vf = init_spiral(cfg)
        k0 = 0
    else:
        uf, vf, k0 = resume
        if uf.n != cfg.N or abs(uf.h - cfg.h) > 1e-12:
            raise ConfigurationError("snapshot grid does not match the configuration")
    u = uf.values.copy()
    v = vf.values.copy()
    origin = (-cfg.L, -cfg.L)

    stepper = _Stepper(cfg, phi_term.values)
    steps = cfg.steps
    rec_steps, rec_t, rec_xy = [], [], []
    prev = None

    def record(k):
        nonlocal prev
        fu = Field2D(u, cfg.h, origin)
        fv = Field2D(v, cfg.h, origin)
        tip = tip_locate(fu, fv, cfg.tip_u, tip_v, prev)
        rec_steps.append(k)
        rec_t.append(k * cfg.dt)
        rec_xy.append(tip)
        if tip is not None:
            prev = tip

    for k in range(k0, steps + 1):
        if k % cfg.record_stride == 0 or k == steps:
            record(k)
        if snapshot_sink is not None and cfg.snapshot_stride and k % cfg.snapshot_stride == 0:
            snapshot_sink(k, Field2D(u, cfg.h, origin), Field2D(v, cfg.h, origin))
        if k == steps:
            break
        u, v = stepper.step(u, v)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise BlowUpError(f"non-finite field values after step {k + 1}")
        if progress is not None:
            progress(k + 1, steps)

    found = [(k, t, xy) for k, t, xy in zip(rec_steps, rec_t, rec_xy) if xy is not None]
    t_mid = 0.5 * (k0 * cfg.dt + cfg.t_end)
    late = [xy for t, xy in zip(rec_t, rec_xy) if t >= t_mid]
    missing = sum(1 for xy in late if xy is None) / max(1, len(late))
    lost = missing > 0.10
    if lost:
        warnings.warn(
            f"tip missing in {missing:.0%} of late-time samples; spiral lost",
            stacklevel=2,
        )

    if found:
        steps_arr = np.array([k for k, _, _ in found])
        samples = np.array([(t, xy[0], xy[1]) for _, t, xy in found])
        centers = revolution_centers(samples[:, 1] + 1j * samples[:, 2])
    else:
        steps_arr = np.zeros(0, dtype=int)
        samples = np.zeros((0, 3))
        centers = []
    loop_center = centers[-1] if centers else None
    tip_path = TipPath(steps=steps_arr, samples=samples, loop_center=loop_center)
    return RdasResult(
        tip_path=tip_path,
        u=Field2D(u, cfg.h, origin),
        v=Field2D(v, cfg.h, origin),
        loop_center=loop_center,
        revolution_centers=centers,
        lost_spiral=lost,
        missing_late_fraction=missing,
        steps_run=steps - k0,
    )


# ---------------------------------------------------------------------------
# Snapshot files: 32-byte header + u + v as little-endian float64, row-major


def write_snapshot(path, u, v, step, t):
    header = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, u.n, int(step), u.h, float(t))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(u.values.astype("<f8", copy=False).tobytes(order="C"))
        fh.write(v.values.astype("<f8", copy=False).tobytes(order="C"))


def read_snapshot(path):
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        magic, version, n, step, h, t = _HEADER.unpack(header)
        if magic != SNAPSHOT_MAGIC:
            raise ConfigurationError(f"{path}: not a field snapshot")
        if version != SNAPSHOT_VERSION:
            raise ConfigurationError(f"{path}: unsupported snapshot version {version}")
        payload = np.frombuffer(fh.read(), dtype="<f8")
    if payload.size != 2 * n * n:
        raise ConfigurationError(f"{path}: truncated snapshot payload")
    half_l = h * (n - 1) / 2.0
    origin = (-half_l, -half_l)
    u = Field2D(payload[: n * n].reshape(n, n).copy(), h, origin)
    v = Field2D(payload[n * n :].reshape(n, n).copy(), h, origin)
    return u, v, step, t
