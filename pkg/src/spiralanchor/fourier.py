"""Truncated complex Fourier series on an integer base frequency, the
mode-diagonal operator Y(u) = iu + u', and the periodic reference paths the
recentred coordinates are built around.

Series live on a base frequency f >= 1: s(t) = sum_{|m|<=M} c_m e^{i m f t},
so every series is 2*pi/f-periodic by construction.  Y acts diagonally with
symbol i(1 + m f); it is invertible except at the resonant mode m = -1 when
f = 1, which is exactly the mode that separates the drift-dominated case from
the symmetric one.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import ConfigurationError, NoSolutionError, SingularOperatorError

TWO_PI = 2.0 * math.pi


class FourierSeries:
    """Immutable truncated series sum_m c_m e^{i m f t}.

    Coefficients are stored as a dense complex array ordered m = -M..M, so
    the representation itself guarantees there are no entries outside the
    truncation window.
    """

    __slots__ = ("base_freq", "coeffs")

    def __init__(self, base_freq, coeffs):
        base_freq = int(base_freq)
        if base_freq < 1:
            raise ConfigurationError(f"base frequency must be >= 1, got {base_freq}")
        arr = np.array(coeffs, dtype=complex)
        if arr.ndim != 1 or arr.size % 2 != 1:
            raise ConfigurationError(
                "coefficients must be a 1-d odd-length array ordered m=-M..M"
            )
        if not np.all(np.isfinite(arr.view(float))):
            raise ConfigurationError("coefficients must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "base_freq", base_freq)
        object.__setattr__(self, "coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("FourierSeries is immutable")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def zeros(cls, truncation, base_freq):
        return cls(base_freq, np.zeros(2 * int(truncation) + 1, dtype=complex))

    @classmethod
    def constant(cls, value, base_freq):
        return cls(base_freq, np.array([value], dtype=complex))

    @classmethod
    def from_modes(cls, modes, base_freq, truncation=None):
        """Build from a {m: coefficient} mapping."""
        modes = {int(m): complex(c) for m, c in dict(modes).items()}
        if truncation is None:
            truncation = max((abs(m) for m in modes), default=0)
        truncation = int(truncation)
        coeffs = np.zeros(2 * truncation + 1, dtype=complex)
        for m, c in modes.items():
            if abs(m) > truncation:
                raise ConfigurationError(
                    f"mode {m} lies outside the truncation window [-{truncation}, {truncation}]"
                )
            coeffs[m + truncation] = c
        return cls(base_freq, coeffs)

    # -- basic queries ---------------------------------------------------------

    @property
    def truncation(self):
        return (self.coeffs.size - 1) // 2

    @property
    def modes(self):
        return np.arange(-self.truncation, self.truncation + 1)

    def coeff(self, m):
        """Coefficient of mode m (zero outside the truncation window)."""
        m = int(m)
        if abs(m) > self.truncation:
            return 0j
        return complex(self.coeffs[m + self.truncation])

    def padded(self, truncation):
        """Same series with a wider coefficient window."""
        truncation = int(truncation)
        if truncation < self.truncation:
            raise ConfigurationError("padding may not shrink the window")
        out = np.zeros(2 * truncation + 1, dtype=complex)
        lo = truncation - self.truncation
        out[lo : lo + self.coeffs.size] = self.coeffs
        return FourierSeries(self.base_freq, out)

    # -- algebra ---------------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, FourierSeries):
            return NotImplemented
        if other.base_freq != self.base_freq:
            raise ConfigurationError("cannot add series on different base frequencies")
        m = max(self.truncation, other.truncation)
        return FourierSeries(
            self.base_freq, self.padded(m).coeffs + other.padded(m).coeffs
        )

    def __sub__(self, other):
        if not isinstance(other, FourierSeries):
            return NotImplemented
        return self + (-1.0) * other

    def __mul__(self, scalar):
        return FourierSeries(self.base_freq, self.coeffs * complex(scalar))

    __rmul__ = __mul__

    # -- evaluation ------------------------------------------------------------

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        phases = np.exp(1j * self.base_freq * np.multiply.outer(t, self.modes))
        out = phases @ self.coeffs
        if t.ndim == 0:
            return complex(out)
        return out


def series_eval(series, t):
    """Evaluate sum_m c_m e^{i m f t} at scalar or array t."""
    return series(t)


def sup_norm(series, npts=None):
    """Sup norm over one period, realised as a max over a uniform grid
    (4M+1 points by default)."""
    if npts is None:
        npts = 4 * series.truncation + 1
    tau = np.arange(npts) * (TWO_PI / (series.base_freq * npts))
    return float(np.max(np.abs(series(tau))))


def _symbol(series):
    """Integer symbol k_m = 1 + m*f of the operator Y on each mode."""
    return 1 + series.modes * series.base_freq


def y_apply(series):
    """Apply Y(u) = iu + u': coefficient-wise c_m -> i(1 + m f) c_m.

    Implemented on real components so each output component is a single
    rounded multiplication by the integer symbol.
    """
    k = _symbol(series)
    out = np.empty_like(series.coeffs)
    out.real = -k * series.coeffs.imag
    out.imag = k * series.coeffs.real
    return FourierSeries(series.base_freq, out)


def y_invert(series):
    """Invert Y coefficient-wise: c_m -> c_m / (i(1 + m f)).

    On base frequency 1 the mode m = -1 has zero symbol; it must be absent
    or the operator is singular.  Implemented on real components so each
    output component is a single rounded division by the integer symbol.
    """
    k = _symbol(series)
    kernel = k == 0
    if np.any(kernel):
        if np.any(series.coeffs[kernel] != 0):
            raise SingularOperatorError(
                "resonant mode m=-1 on base frequency 1 has a nonzero "
                "coefficient; Y is singular there"
            )
        k = np.where(kernel, 1, k)
    out = np.empty_like(series.coeffs)
    out.real = series.coeffs.imag / k
    out.imag = -series.coeffs.real / k
    if np.any(kernel):
        out[kernel] = 0
    return FourierSeries(series.base_freq, out)


class ReferencePath:
    """Periodic path F(t) = e^{it} B(t) with B a truncated series (the
    "bracket").  Its exact time derivative is e^{it} (Y B)(t), which is what
    makes the recentred equations clean.
    """

    __slots__ = ("bracket", "y_bracket")

    def __init__(self, bracket):
        object.__setattr__(self, "bracket", bracket)
        object.__setattr__(self, "y_bracket", y_apply(bracket))

    def __setattr__(self, name, value):
        raise AttributeError("ReferencePath is immutable")

    @property
    def base_freq(self):
        return self.bracket.base_freq

    def __call__(self, t):
        return np.exp(1j * np.asarray(t, dtype=float)) * self.bracket(t)

    def bracket_value(self, t):
        """B(t) = F(t) e^{-it}; the natural argument for the inhomogeneity
        families along the path."""
        return self.bracket(t)

    def deriv(self, t):
        return np.exp(1j * np.asarray(t, dtype=float)) * self.y_bracket(t)


def _base_bracket(v, forcing, epsilon, truncation):
    """-iv + epsilon * Y^{-1}(forcing with any kernel mode dropped), the
    common bracket core of both reference-path constructions."""
    series = forcing.padded(truncation) if truncation > forcing.truncation else forcing
    if series.base_freq == 1 and series.coeff(-1) != 0:
        coeffs = series.coeffs.copy()
        coeffs[series.truncation - 1] = 0  # drop the resonant m=-1 mode
        series = FourierSeries(1, coeffs)
    return epsilon * y_invert(series) + FourierSeries.constant(-1j * v, series.base_freq)


def build_FG_j1(v, forcing, epsilon):
    """Reference path for base frequency 1:
    F(t) = e^{it} [-iv + eps * sum_{m != -1} g_m e^{imt} / (i(m+1))].

    The resonant m = -1 mode of the forcing is excluded from the sum; its
    coefficient survives only as the secular term in dF/dt.
    """
    if forcing.base_freq != 1:
        raise ConfigurationError(
            f"this construction requires base frequency 1, got {forcing.base_freq}"
        )
    return ReferencePath(_base_bracket(v, forcing, epsilon, forcing.truncation))


def solve_U(v, forcing, h_family, epsilon, mu1, truncation=32, tol=1e-12, max_iter=200):
    """Solve Y(U) = mu1 * P_M H((U + base)(t), c.c., mu1) for the periodic
    correction U on base frequency f >= 2.

    base(t) = -iv + eps*sum_m g_m e^{imft}/(i(mf+1)) and P_M is Fourier
    truncation to |m| <= M realised by collocation on a 4M+1 point grid.
    The fixed point is computed by Picard iteration preconditioned with
    Y^{-1}, which contracts for small mu1 because Y^{-1} is bounded.

    Returns a series whose collocation residual
    sup_t |Y(U)(t) - mu1*(P_M H)(t)| is at most tol.
    Raises NoSolutionError if the iteration does not reach tol, which
    signals parameters outside the contraction neighbourhood.
    """
    jf = forcing.base_freq
    if jf < 2:
        raise ConfigurationError(
            "the periodic correction solve needs base frequency >= 2; "
            "base frequency 1 is resonant and is handled by build_FG_j1"
        )
    truncation = int(truncation)
    if truncation < forcing.truncation:
        raise ConfigurationError("truncation must be at least the forcing truncation")
    if not tol > 0:
        raise ConfigurationError("tol must be positive")

    base = _base_bracket(v, forcing, epsilon, truncation)
    modes = np.arange(-truncation, truncation + 1)
    symbol = 1j * (1 + modes * jf)

    npts = 4 * truncation + 1
    tau = np.arange(npts) * (TWO_PI / (jf * npts))
    eval_mat = np.exp(1j * jf * np.multiply.outer(tau, modes))
    proj_mat = eval_mat.conj().T / npts
    base_vals = eval_mat @ base.coeffs

    u = np.zeros_like(base.coeffs)
    residual = math.inf
    for _ in range(max_iter):
        h_vals = h_family.value(eval_mat @ u + base_vals, mu1)
        u_new = (mu1 * (proj_mat @ h_vals)) / symbol
        h_new = proj_mat @ h_family.value(eval_mat @ u_new + base_vals, mu1)
        residual = float(np.max(np.abs(eval_mat @ (symbol * u_new - mu1 * h_new))))
        u = u_new
        if residual <= tol:
            break
    else:
        raise NoSolutionError(
            f"periodic correction did not converge in {max_iter} iterations "
            f"(residual {residual:.3e}); parameters are outside the "
            "contraction neighbourhood"
        )

    tail = max(abs(u[0]), abs(u[-1]))
    if tail > 1e-10:
        warnings.warn(
            f"periodic correction tail coefficient {tail:.2e} at |m|={truncation}; "
            "increase the truncation",
            stacklevel=2,
        )
    return FourierSeries(jf, u)


def build_FG_jstar(v, forcing, h_family, epsilon, mu1, truncation=32, tol=1e-12):
    """Reference path for base frequency >= 2:
    F(t) = e^{it} [-iv + eps*sum_m g_m e^{imft}/(i(mf+1)) + U(t)]
    with U the solved periodic correction, so that
    dF/dt = e^{it} [v + eps*G(t) + (Y U)(t)].
    """
    u = solve_U(v, forcing, h_family, epsilon, mu1, truncation, tol)
    return ReferencePath(_base_bracket(v, forcing, epsilon, truncation) + u)
