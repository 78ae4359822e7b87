"""Trajectory integration, time-2pi return maps, Floquet multipliers, Newton
location of periodic orbits, anchoring centers, and parameter-plane scans.

The integrator is an embedded Dormand-Prince 5(4) pair with PI-free adaptive
steps on complex state vectors; sample times are hit exactly by clamping the
step, so no interpolation error enters recorded trajectories.  Return-map
Jacobians are obtained from the variational equations written with Wirtinger
derivatives: along z(t) the pair (A, B) = (dz/dz0, dz/dconj(z0)) satisfies

    dA/dt = Jz A + Jzb conj(B),   dB/dt = Jz B + Jzb conj(A)

and the real 2x2 Jacobian of the map is recovered from (A, B) at t = 2pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import bundle
from .errors import (
    DegenerateMapError,
    DriftToInfinityError,
    NoFixedPointError,
    NotPeriodicError,
    StiffnessError,
    UnsupportedConfigurationError,
)
from .fourier import build_FG_j1, build_FG_jstar

TWO_PI = 2.0 * math.pi

# Dormand-Prince RK5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_ERR = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution with step statistics from the adaptive integrator."""

    t: np.ndarray
    p: np.ndarray
    accepted: int
    rejected: int
    max_error: float
    tol: float


def _rk45(f, t0, t1, y0, tol, checkpoints=None, rmax=None):
    """Integrate y' = f(t, y) on [t0, t1] with local error per step <= tol.

    `checkpoints` (sorted, within (t0, t1]) are landed on exactly and the
    state there is recorded.  Returns (times, states, stats, y_final); when
    no checkpoints are given every accepted step is recorded.
    """
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    if not tol > 0:
        raise ValueError("tol must be positive")
    y = np.array(y0, dtype=complex)
    t = t0
    span = t1 - t0
    hmin = 1e-13 * span

    targets = [t1] if checkpoints is None else [float(c) for c in checkpoints]
    record_all = checkpoints is None
    times, states = [], []
    if record_all or (targets and targets[0] == t0):
        times.append(t0)
        states.append(y.copy())
        if not record_all and targets[0] == t0:
            targets = targets[1:]

    f0 = f(t, y)
    fscale = max(1e-8, float(np.max(np.abs(f0))))
    h = min(span, 0.1 * max(1.0, float(np.max(np.abs(y)))) / fscale)

    accepted = rejected = 0
    max_err = 0.0
    next_idx = 0
    k = [None] * 7
    while t < t1:
        target = targets[next_idx] if next_idx < len(targets) else t1
        h_try = min(h, target - t)
        if h_try < hmin:
            raise StiffnessError(
                f"step size underflow at t={t:.6g} (h={h_try:.3e}); "
                "the system is too stiff for the requested tolerance"
            )
        k[0] = f(t, y)
        for i in range(1, 7):
            yi = y + h_try * sum(a * k[j] for j, a in enumerate(_A[i]) if a != 0.0)
            k[i] = f(t + _C[i] * h_try, yi)
        y5 = y + h_try * sum(b * k[j] for j, b in enumerate(_B5) if b != 0.0)
        err = h_try * sum(e * k[j] for j, e in enumerate(_ERR) if e != 0.0)
        err_norm = float(np.max(np.abs(err)))
        if err_norm <= tol:
            accepted += 1
            max_err = max(max_err, err_norm)
            t = target if h_try == target - t else t + h_try
            y = y5
            if rmax is not None and abs(y.flat[0]) > rmax:
                raise DriftToInfinityError(
                    f"orbit magnitude {abs(y.flat[0]):.3g} exceeded the trust "
                    f"radius {rmax:.3g} at t={t:.6g}; drifting to infinity"
                )
            hit_target = t == target
            if record_all or (hit_target and next_idx < len(targets)):
                times.append(t)
                states.append(y.copy())
            if hit_target and next_idx < len(targets):
                next_idx += 1
            factor = 5.0 if err_norm == 0.0 else min(5.0, max(0.2, 0.9 * (tol / err_norm) ** 0.2))
            h = min(span, h_try * factor)
        else:
            rejected += 1
            h = h_try * max(0.1, 0.9 * (tol / err_norm) ** 0.2)
    stats = {"accepted": accepted, "rejected": rejected, "max_error": max_err}
    return np.array(times), np.array(states), stats, y


def integrate(rhs, p0, t0, t1, tol=1e-10, n_samples=None, rmax=None):
    """Integrate a scalar complex ODE p' = rhs(t, p) adaptively.

    With n_samples the trajectory is recorded on a uniform grid over
    [t0, t1] (landed on exactly); otherwise every accepted step is recorded.
    """
    f = lambda t, y: np.array((rhs(t, y[0]),))
    checkpoints = None if n_samples is None else np.linspace(t0, t1, int(n_samples))
    times, states, stats, _ = _rk45(f, t0, t1, (complex(p0),), tol, checkpoints, rmax)
    return Trajectory(
        t=times,
        p=states[:, 0],
        accepted=stats["accepted"],
        rejected=stats["rejected"],
        max_error=stats["max_error"],
        tol=tol,
    )


# ---------------------------------------------------------------------------
# Flows of the two routes to a periodic orbit


class TransformedFlow:
    """Flow of the recentred single-site system around its reference path.

    Valid for n = 1 with the site at the origin; the reference path is built
    once per parameter point (the resonance-free construction for jstar = 1,
    the solved periodic correction otherwise).
    """

    def __init__(self, params, spec, truncation=32, path_tol=1e-12):
        bundle._check_compatible(params, spec)
        if params.n_sites != 1 or params.xi[0] != 0:
            raise UnsupportedConfigurationError(
                "the recentred flow needs exactly one site at the origin"
            )
        self.params = params
        self.spec = spec
        if params.jstar == 1:
            self.path = build_FG_j1(params.v, spec.G, params.epsilon)
        else:
            self.path = build_FG_jstar(
                params.v,
                spec.G,
                spec.H[0],
                params.epsilon,
                params.mu[0],
                truncation,
                path_tol,
            )
        self._gm1 = spec.G.coeff(-1)

    def rhs(self, t, z):
        return bundle.rhs_transformed(self.params, self.spec, z, t, self.path)

    def jacobians(self, t, z):
        """Wirtinger derivatives (dz'/dz, dz'/dzbar) at (t, z)."""
        eit = complex(math.cos(t), math.sin(t))
        w = z * eit.conjugate() + self.path.bracket_value(t)
        mu1 = self.params.mu[0]
        fam = self.spec.H[0]
        return mu1 * fam.d_dw(w), mu1 * eit * eit * fam.d_dwbar(w)

    def to_physical(self, t, z):
        """Map recentred samples back to p = z + F(t)."""
        return z + self.path(t)

    def initial_guess(self):
        return 0j


class DirectFlow:
    """Flow of the drift equation itself; works for any number of sites and
    arbitrary site positions (the return map acts on p)."""

    def __init__(self, params, spec, site=0):
        bundle._check_compatible(params, spec)
        self.params = params
        self.spec = spec
        self.site = site

    def rhs(self, t, p):
        return bundle.rhs(self.params, self.spec, p, t)

    def jacobians(self, t, p):
        eit = complex(math.cos(t), math.sin(t))
        emit = eit.conjugate()
        jz = 0j
        jzb = 0j
        for mu_j, xi_j, fam in zip(self.params.mu, self.params.xi, self.spec.H):
            w = (p - xi_j) * emit
            jz += mu_j * fam.d_dw(w)
            jzb += mu_j * fam.d_dwbar(w)
        return jz, eit * eit * jzb

    def to_physical(self, t, z):
        return z

    def initial_guess(self):
        if self.params.n_sites:
            return self.params.xi[self.site] - 1j * self.params.v
        return -1j * self.params.v


def _flow_map(flow, z0, tol, rmax=None):
    f = lambda t, y: np.array((flow.rhs(t, y[0]),))
    _, _, _, y = _rk45(f, 0.0, TWO_PI, (complex(z0),), tol, checkpoints=(), rmax=rmax)
    return y[0]


def _flow_map_var(flow, z0, tol, rmax=None):
    """Return (P(z0), A, B): the map value and the Wirtinger pair of its
    derivative, from one integration of the variational system."""

    def f(t, y):
        z, a, b = y
        jz, jzb = flow.jacobians(t, z)
        return np.array(
            (flow.rhs(t, z), jz * a + jzb * b.conjugate(), jz * b + jzb * a.conjugate())
        )

    _, _, _, y = _rk45(f, 0.0, TWO_PI, (complex(z0), 1 + 0j, 0j), tol, checkpoints=(), rmax=rmax)
    return y[0], y[1], y[2]


def _orbit(flow, z0, tol, n_samples):
    """One-period trajectory of the physical coordinate p through z0."""
    f = lambda t, y: np.array((flow.rhs(t, y[0]),))
    grid = np.linspace(0.0, TWO_PI, int(n_samples))
    times, states, stats, _ = _rk45(f, 0.0, TWO_PI, (complex(z0),), tol, checkpoints=grid)
    return Trajectory(
        t=times,
        p=flow.to_physical(times, states[:, 0]),
        accepted=stats["accepted"],
        rejected=stats["rejected"],
        max_error=stats["max_error"],
        tol=tol,
    )


def _real_jacobian(a, b):
    """Real 2x2 matrix of the R^2 linear map w -> a*w + b*conj(w)."""
    return np.array(
        [
            [a.real + b.real, -a.imag + b.imag],
            [a.imag + b.imag, a.real - b.real],
        ]
    )


def classify(multipliers, eta=1e-6):
    """anchoring if both multipliers are inside the unit circle by margin
    eta, repelling if both are outside, non-hyperbolic otherwise."""
    mags = [abs(m) for m in multipliers]
    if all(m < 1.0 - eta for m in mags):
        return "anchoring"
    if all(m > 1.0 + eta for m in mags):
        return "repelling"
    return "non-hyperbolic"


@dataclass(frozen=True)
class PoincareResult:
    """Fixed point of the time-2pi map with its Floquet data."""

    z_star: complex
    multipliers: tuple
    classification: str
    anchor_center: complex
    residual: float
    iterations: int = 0


def _sorted_eigvals(mat):
    vals = np.linalg.eigvals(mat)
    vals = sorted((complex(v) for v in vals), key=lambda z: (z.real, z.imag))
    return tuple(vals)


def _make_transformed_flow(params, spec, truncation, path_tol):
    return TransformedFlow(params, spec, truncation=truncation, path_tol=path_tol)


def time2pi_map(params, spec, z0, tol=1e-12, truncation=32, path_tol=1e-12, flow=None):
    """Flow the recentred single-site equation from t=0 to t=2pi."""
    if flow is None:
        flow = _make_transformed_flow(params, spec, truncation, path_tol)
    return _flow_map(flow, z0, tol)


def monodromy(params, spec, z_star, tol=1e-12, truncation=32, path_tol=1e-12, flow=None):
    """Floquet multipliers: eigenvalues of the real 2x2 Jacobian of the
    time-2pi map at z_star, from the variational equations."""
    if flow is None:
        flow = _make_transformed_flow(params, spec, truncation, path_tol)
    _, a, b = _flow_map_var(flow, z_star, tol)
    return _sorted_eigvals(_real_jacobian(a, b))


def anchoring_center(traj, periodicity_tol=None):
    """Time average of p over one period by trapezoid quadrature.

    The trajectory must span one full period and close up to within
    periodicity_tol (default 10x the integration tolerance).
    """
    span = float(traj.t[-1] - traj.t[0])
    if abs(span - TWO_PI) > 1e-9:
        raise NotPeriodicError(
            f"trajectory spans {span:.12g}, expected one period {TWO_PI:.12g}"
        )
    ptol = 10.0 * traj.tol if periodicity_tol is None else periodicity_tol
    gap = abs(traj.p[-1] - traj.p[0])
    if gap > ptol:
        raise NotPeriodicError(
            f"trajectory does not close up: |p(end)-p(0)| = {gap:.3e} > {ptol:.3e}; "
            "not a perturbed rotating wave"
        )
    return complex(np.trapezoid(traj.p, traj.t) / span)


def newton_fixed_point(
    params,
    spec,
    z_guess,
    tol=1e-10,
    eta=1e-6,
    integ_tol=None,
    truncation=32,
    path_tol=1e-12,
    max_iter=50,
    center_samples=513,
    flow=None,
    rmax=None,
):
    """Newton iteration on z -> P(z) - z using the variational Jacobian.

    Returns the fixed point with its multipliers, classification, and the
    anchoring center of the reconstructed one-period physical orbit.
    Raises DegenerateMapError when the map Jacobian is within eta of the
    identity (non-hyperbolic; includes mu1 = 0) and NoFixedPointError when
    the iteration does not converge near the guess.
    """
    if integ_tol is None:
        integ_tol = min(1e-12, tol / 100.0)
    if flow is None:
        flow = _make_transformed_flow(params, spec, truncation, path_tol)
    if rmax is None:
        rmax = 1e3 * max(abs(flow.params.v), 1.0)

    identity = np.eye(2)
    z = complex(z_guess)
    for it in range(1, max_iter + 1):
        pz, a, b = _flow_map_var(flow, z, integ_tol, rmax=rmax)
        jac = _real_jacobian(a, b)
        if np.max(np.abs(jac - identity)) < eta:
            raise DegenerateMapError(
                "return map is the identity to within the hyperbolicity margin; "
                "no isolated fixed point (is mu1 = 0?)"
            )
        res = pz - z
        if abs(res) <= tol:
            mults = _sorted_eigvals(jac)
            traj = _orbit(flow, z, integ_tol, center_samples)
            center = anchoring_center(traj, periodicity_tol=max(10.0 * tol, 100.0 * integ_tol))
            return PoincareResult(
                z_star=z,
                multipliers=mults,
                classification=classify(mults, eta),
                anchor_center=center,
                residual=abs(res),
                iterations=it,
            )
        try:
            step = np.linalg.solve(jac - identity, -np.array((res.real, res.imag)))
        except np.linalg.LinAlgError as exc:
            raise DegenerateMapError("return-map Jacobian minus identity is singular") from exc
        z += complex(step[0], step[1])
    raise NoFixedPointError(
        f"Newton did not converge within {max_iter} iterations from {z_guess}; "
        f"last residual {abs(res):.3e}"
    )


# ---------------------------------------------------------------------------
# Parameter scans


@dataclass(frozen=True)
class ScanRecord:
    epsilon: float
    mu: tuple
    converged: bool
    z_star: complex = 0j
    anchor_center: complex = 0j
    multipliers: tuple = (0j, 0j)
    classification: str = "failed"
    message: str = ""


@dataclass(frozen=True)
class ScanTable:
    """Scan results organised as rows (the continuation unit)."""

    rows: tuple
    n_sites: int

    def __iter__(self):
        for row in self.rows:
            yield from row

    @property
    def records(self):
        return [rec for rec in self]

    def to_csv(self, path=None):
        header = ["epsilon"]
        header += [f"mu{j + 1}" for j in range(self.n_sites)]
        header += [
            "converged",
            "z_star_re",
            "z_star_im",
            "center_re",
            "center_im",
            "mult1_abs",
            "mult2_abs",
            "classification",
        ]
        lines = [",".join(header)]
        for rec in self:
            cells = [repr(rec.epsilon)]
            cells += [repr(m) for m in rec.mu]
            cells += [
                "1" if rec.converged else "0",
                repr(rec.z_star.real),
                repr(rec.z_star.imag),
                repr(rec.anchor_center.real),
                repr(rec.anchor_center.imag),
                repr(abs(rec.multipliers[0])),
                repr(abs(rec.multipliers[1])),
                rec.classification,
            ]
            lines.append(",".join(cells))
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def parameter_grid(epsilons, mus):
    """Rows of (epsilon, mu-tuple) points: one row per mu value, swept over
    epsilon. mu entries may be scalars (one site) or tuples."""
    rows = []
    for mu in mus:
        mu_t = tuple(mu) if np.iterable(mu) else (float(mu),)
        rows.append([(float(e), mu_t) for e in epsilons])
    return rows


def wedge_scan(
    params,
    spec,
    rows,
    site=0,
    newton_tol=1e-10,
    eta=1e-6,
    integ_tol=1e-12,
    truncation=32,
    path_tol=1e-12,
    threads=1,
    z_seed=None,
):
    """Locate the periodic orbit over a grid of (epsilon, mu) points.

    Each row is scanned in order with continuation (the previous solution
    seeds the next point); rows are independent and may run concurrently.
    Single-site grids with the site at the origin use the recentred route;
    anything else integrates the drift equation directly and applies the
    same Newton machinery to the return map on p.  Non-converged points are
    recorded, not raised: they delimit the empirical wedge/cone.
    """

    def scan_row(row):
        out = []
        seed = z_seed
        for eps, mu in row:
            pt = replace(params, epsilon=float(eps), mu=tuple(mu))
            try:
                if pt.n_sites == 1 and pt.xi[0] == 0:
                    flow = TransformedFlow(pt, spec, truncation, path_tol)
                else:
                    flow = DirectFlow(pt, spec, site=site)
                guess = flow.initial_guess() if seed is None else seed
                res = newton_fixed_point(
                    pt,
                    spec,
                    guess,
                    tol=newton_tol,
                    eta=eta,
                    integ_tol=integ_tol,
                    flow=flow,
                )
                out.append(
                    ScanRecord(
                        epsilon=float(eps),
                        mu=tuple(mu),
                        converged=True,
                        z_star=res.z_star,
                        anchor_center=res.anchor_center,
                        multipliers=res.multipliers,
                        classification=res.classification,
                    )
                )
                seed = res.z_star
            except Exception as exc:  # noqa: BLE001 - per-point failures are data
                out.append(
                    ScanRecord(
                        epsilon=float(eps),
                        mu=tuple(mu),
                        converged=False,
                        message=f"{type(exc).__name__}: {exc}",
                    )
                )
        return out

    rows = [list(row) for row in rows]
    n_sites = params.n_sites
    if threads > 1 and len(rows) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(scan_row, rows))
    else:
        results = [scan_row(row) for row in rows]
    return ScanTable(rows=tuple(tuple(r) for r in results), n_sites=n_sites)
