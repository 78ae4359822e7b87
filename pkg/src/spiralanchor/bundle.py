"""Parameter model and right-hand sides of the reduced drift equations for a
rotating wave under combined symmetry breaking.

The translational coordinate p obeys

    dp/dt = e^{it} [ v + eps*G(t) + sum_j mu_j * H_j((p - xi_j) e^{-it}, c.c., mu_j) ]

where G is the rotational forcing (a truncated Fourier series on base
frequency jstar) and each H_j is a smooth, uniformly bounded inhomogeneity
family acting in the co-rotating frame of its site xi_j.  The module also
evaluates the recentred z = p - F(t) form of the same equation around a
reference path F.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, UnsupportedConfigurationError
from .fourier import FourierSeries, ReferencePath, series_eval

H_KINDS = ("linear", "affine-linear", "saturated-polynomial", "radial-gaussian")


def _as_finite_complex(value, name):
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ConfigurationError(f"{name} must have finite components, got {z!r}")
    return z


def _as_finite_float(value, name):
    x = float(value)
    if not math.isfinite(x):
        raise ConfigurationError(f"{name} must be finite, got {x!r}")
    return x


@dataclass(frozen=True)
class BundleParams:
    """All parameters of the drift equation: unperturbed drift v, rotational
    symmetry-breaking strength epsilon, inhomogeneity strengths mu at pairwise
    distinct sites xi, and the preserved-rotation index jstar.

    n = len(mu) = 0 is admitted and means the inhomogeneity sum is empty.
    """

    v: complex
    epsilon: float = 0.0
    mu: tuple = ()
    xi: tuple = ()
    jstar: int = 1

    def __post_init__(self):
        object.__setattr__(self, "v", _as_finite_complex(self.v, "v"))
        object.__setattr__(self, "epsilon", _as_finite_float(self.epsilon, "epsilon"))
        mu = tuple(_as_finite_float(m, "mu") for m in self.mu)
        xi = tuple(_as_finite_complex(x, "xi") for x in self.xi)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "jstar", int(self.jstar))
        if len(mu) != len(xi):
            raise ConfigurationError(
                f"mu and xi must have equal length, got {len(mu)} and {len(xi)}"
            )
        if len(set(xi)) != len(xi):
            raise ConfigurationError("inhomogeneity sites xi must be pairwise distinct")
        if self.jstar < 1:
            raise ConfigurationError(f"jstar must be a positive integer, got {self.jstar}")

    @property
    def n_sites(self):
        return len(self.mu)


@dataclass(frozen=True)
class HFamily:
    """One inhomogeneity family H(w, conj(w), mu).

    Kinds:
      linear               alpha*w + beta*conj(w)           (unbounded; oracle use)
      affine-linear        c + alpha*w + beta*conj(w)       (unbounded; oracle use)
      saturated-polynomial sum_k c_k w^k / (1+|w|^2/s^2)^d  (bounded for 2d >= deg)
      radial-gaussian      c * exp(-|w|^2/s^2)              (bounded)

    None of the shipped kinds depends on mu; the argument is accepted for
    interface uniformity.  Values and derivatives are vectorised over numpy
    arrays of w.
    """

    kind: str
    coefficients: tuple
    saturation_scale: float = 1.0
    decay_power: int = field(default=None)

    def __post_init__(self):
        if self.kind not in H_KINDS:
            raise ConfigurationError(
                f"unknown inhomogeneity kind {self.kind!r}; expected one of {H_KINDS}"
            )
        coeffs = tuple(_as_finite_complex(c, "coefficient") for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        scale = _as_finite_float(self.saturation_scale, "saturation_scale")
        if scale <= 0:
            raise ConfigurationError("saturation_scale must be positive")
        object.__setattr__(self, "saturation_scale", scale)
        if self.kind == "linear" and len(coeffs) != 2:
            raise ConfigurationError("linear kind takes exactly two coefficients (alpha, beta)")
        if self.kind == "affine-linear" and len(coeffs) != 3:
            raise ConfigurationError(
                "affine-linear kind takes exactly three coefficients (offset, alpha, beta)"
            )
        if self.kind == "radial-gaussian" and len(coeffs) != 1:
            raise ConfigurationError("radial-gaussian kind takes exactly one coefficient")
        if self.kind == "saturated-polynomial":
            if not coeffs:
                raise ConfigurationError("saturated-polynomial needs at least one coefficient")
            degree = self._degree(coeffs)
            power = self.decay_power
            if power is None:
                power = (degree + 1) // 2
            power = int(power)
            if 2 * power < degree:
                raise ConfigurationError(
                    f"decay power {power} too small for degree {degree}; "
                    "the family would be unbounded"
                )
            object.__setattr__(self, "decay_power", power)
        else:
            object.__setattr__(self, "decay_power", None)

    @staticmethod
    def _degree(coeffs):
        deg = 0
        for k, c in enumerate(coeffs):
            if c != 0:
                deg = k
        return deg

    # -- constructors ----------------------------------------------------------

    @classmethod
    def linear(cls, alpha, beta=0j):
        return cls("linear", (alpha, beta))

    @classmethod
    def affine(cls, offset, alpha, beta=0j):
        return cls("affine-linear", (offset, alpha, beta))

    @classmethod
    def saturated(cls, coefficients, scale=1.0, power=None):
        return cls("saturated-polynomial", tuple(coefficients), scale, power)

    @classmethod
    def gaussian(cls, amplitude, scale=1.0):
        return cls("radial-gaussian", (amplitude,), scale)

    # -- evaluation ------------------------------------------------------------

    def _poly(self, w):
        acc = np.zeros_like(w)
        for c in reversed(self.coefficients):
            acc = acc * w + c
        return acc

    def _poly_deriv(self, w):
        acc = np.zeros_like(w)
        for k in range(len(self.coefficients) - 1, 0, -1):
            acc = acc * w + k * self.coefficients[k]
        return acc

    def value(self, w, mu=0.0):
        """Evaluate H at w (scalar complex or complex array)."""
        scalar = np.isscalar(w) or getattr(w, "ndim", 1) == 0
        w = np.asarray(w, dtype=complex)
        if self.kind == "linear":
            alpha, beta = self.coefficients
            out = alpha * w + beta * np.conj(w)
        elif self.kind == "affine-linear":
            offset, alpha, beta = self.coefficients
            out = offset + alpha * w + beta * np.conj(w)
        elif self.kind == "radial-gaussian":
            (amp,) = self.coefficients
            out = amp * np.exp(-(w.real**2 + w.imag**2) / self.saturation_scale**2)
        else:
            den = 1.0 + (w.real**2 + w.imag**2) / self.saturation_scale**2
            out = self._poly(w) / den**self.decay_power
        return complex(out) if scalar else out

    def d_dw(self, w):
        """Wirtinger derivative dH/dw."""
        scalar = np.isscalar(w) or getattr(w, "ndim", 1) == 0
        w = np.asarray(w, dtype=complex)
        if self.kind == "linear":
            out = np.full_like(w, self.coefficients[0])
        elif self.kind == "affine-linear":
            out = np.full_like(w, self.coefficients[1])
        elif self.kind == "radial-gaussian":
            (amp,) = self.coefficients
            s2 = self.saturation_scale**2
            out = amp * np.exp(-(w.real**2 + w.imag**2) / s2) * (-np.conj(w) / s2)
        else:
            s2 = self.saturation_scale**2
            den = 1.0 + (w.real**2 + w.imag**2) / s2
            out = self._poly_deriv(w) / den**self.decay_power - (
                self.decay_power * self._poly(w) * np.conj(w) / s2
            ) / den ** (self.decay_power + 1)
        return complex(out) if scalar else out

    def d_dwbar(self, w):
        """Wirtinger derivative dH/d(conj w)."""
        scalar = np.isscalar(w) or getattr(w, "ndim", 1) == 0
        w = np.asarray(w, dtype=complex)
        if self.kind == "linear":
            out = np.full_like(w, self.coefficients[1])
        elif self.kind == "affine-linear":
            out = np.full_like(w, self.coefficients[2])
        elif self.kind == "radial-gaussian":
            (amp,) = self.coefficients
            s2 = self.saturation_scale**2
            out = amp * np.exp(-(w.real**2 + w.imag**2) / s2) * (-w / s2)
        else:
            s2 = self.saturation_scale**2
            den = 1.0 + (w.real**2 + w.imag**2) / s2
            out = -(self.decay_power * self._poly(w) * w / s2) / den ** (
                self.decay_power + 1
            )
        return complex(out) if scalar else out

    def bound(self):
        """A computable uniform bound on |H| over all w (inf for the
        unbounded linear kinds)."""
        if self.kind in ("linear", "affine-linear"):
            return math.inf
        if self.kind == "radial-gaussian":
            return abs(self.coefficients[0])
        s, d = self.saturation_scale, self.decay_power
        total = 0.0
        for k, c in enumerate(self.coefficients):
            if c == 0:
                continue
            if k == 0:
                peak = 1.0
            elif 2 * d == k:
                peak = s**k  # supremum approached as |w| -> inf
            else:
                r2 = k * s * s / (2 * d - k)
                peak = r2 ** (k / 2) * ((2 * d - k) / (2 * d)) ** d
            total += abs(c) * peak
        return total


@dataclass(frozen=True)
class PerturbationSpec:
    """The two symmetry-breaking ingredients: the rotational forcing G as a
    truncated Fourier series and one inhomogeneity family per site."""

    G: FourierSeries
    H: tuple = ()

    def __post_init__(self):
        if not isinstance(self.G, FourierSeries):
            raise ConfigurationError("G must be a FourierSeries")
        families = tuple(self.H)
        for fam in families:
            if not isinstance(fam, HFamily):
                raise ConfigurationError("H entries must be HFamily instances")
        object.__setattr__(self, "H", families)


def _check_compatible(params, spec):
    if spec.G.base_freq != params.jstar:
        raise ConfigurationError(
            f"forcing base frequency {spec.G.base_freq} does not match jstar {params.jstar}"
        )
    if len(spec.H) != params.n_sites:
        raise ConfigurationError(
            f"{params.n_sites} site(s) but {len(spec.H)} inhomogeneity family(ies)"
        )


def eval_G(spec, t, epsilon=0.0):
    """Evaluate the rotational forcing sum_m g_m e^{i m jstar t}.

    Coefficient tables are per-run constants in epsilon, so the epsilon
    argument only selects the (single) table and does not enter the sum.
    """
    return series_eval(spec.G, t)


def eval_H(fam, w, mu_j=0.0):
    """Evaluate one inhomogeneity family at w."""
    return fam.value(w, mu_j)


def rhs(params, spec, p, t):
    """Right-hand side of the drift equation at (p, t)."""
    _check_compatible(params, spec)
    eit = cmath.exp(1j * t)
    acc = params.v + params.epsilon * series_eval(spec.G, t)
    if params.mu:
        emit = eit.conjugate()
        for mu_j, xi_j, fam in zip(params.mu, params.xi, spec.H):
            acc += mu_j * fam.value((p - xi_j) * emit, mu_j)
    return eit * acc


def rhs_transformed(params, spec, z, t, path):
    """Right-hand side in the recentred coordinate z = p - F(t) for a single
    site at the origin.

    For jstar = 1:
        dz/dt = eps*g_{-1} + mu1 * e^{it} H((z + F) e^{-it}, c.c., mu1)
    For jstar > 1:
        dz/dt = mu1 * e^{it} [H((z + F) e^{-it}, ...) - H(F e^{-it}, ...)]

    `path` is the reference path F (a ReferencePath, or any callable t -> F(t)).
    """
    _check_compatible(params, spec)
    if params.n_sites != 1:
        raise UnsupportedConfigurationError(
            f"the recentred form needs exactly one site, got {params.n_sites}"
        )
    if params.xi[0] != 0:
        raise UnsupportedConfigurationError(
            "the recentred form assumes the single site sits at the origin"
        )
    mu1 = params.mu[0]
    fam = spec.H[0]
    eit = cmath.exp(1j * t)
    if isinstance(path, ReferencePath):
        ref = path.bracket_value(t)  # F(t) e^{-it}, evaluated without cancellation
    else:
        ref = path(t) * eit.conjugate()
    w = z * eit.conjugate() + ref
    if params.jstar == 1:
        return params.epsilon * spec.G.coeff(-1) + mu1 * eit * fam.value(w, mu1)
    return mu1 * eit * (fam.value(w, mu1) - fam.value(ref, mu1))
