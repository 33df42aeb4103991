"""Closed-form spectral representations and their quadrature oracles.

Fourier conventions (cycles, not angular frequency):

* generalized spectral density (GSD) of a kernel, forward transform
      S(w, xi) = \\int\\int k(x, x') exp(-2 i pi (w.x - xi.x')) dx dx'
  so that k(x, x') = \\int\\int S(w, xi) exp(2 i pi (w.x - xi.x')) dw dxi.
* Wigner distribution function (WDF)
      W(x, w) = \\int k(x + tau/2, x - tau/2) exp(-2 i pi w.tau) dtau,
  real-valued for any Hermitian kernel.

Closed forms implemented here:

* LSG:  S(w, xi) = N((w+xi)/2 | 0, S2) * N(w - xi | 0, S1)
        W(x, w)  = N(w | 0, S2) * exp(-2 pi^2 x.S1.x)
  The (w+xi)/2 factor carries the lag-decay matrix S2 and the (w-xi) factor
  carries the centroid-envelope matrix S1; this pairing is confirmed by the
  double-Fourier quadrature oracle in the test suite (the swapped pairing
  fails it).
* HMK:  sums of shifted/scaled LSG densities weighted by the amplitude
  matrices, with the component shift c_p contributing the phase
  exp(-2 i pi c_p.(w - xi)); the Wigner sum carries the weight
  Re[b_ij exp(2 i pi (mu_i - mu_j).x)] per frequency pair.

For a real-valued kernel (the average of a complex kernel with its
conjugate) the representations are symmetrized:
S_r(w, xi) = (S(w, xi) + conj(S(-w, -xi)))/2 and
W_r(x, w) = (W(x, w) + W(x, -w))/2, giving the conjugate pairing
S_r(-w, -xi) = conj(S_r(w, xi)) and the frequency-even Wigner function.

The quadrature oracles are brute-force trapezoid integrals used to validate
every closed form; they are exported because acceptance checks and the CLI
gradcheck harness call them directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .kernels import TWO_PI_SQ, HMKParams, LSGParams, SMParams

__all__ = [
    "NotIntegrable",
    "WindowTooSmall",
    "FrequencyGrid",
    "QuadratureConfig",
    "gsd_lsg",
    "gsd_hmk",
    "wdf_lsg",
    "wdf_hmk",
    "sd_sm",
    "gsd_lsg_pairs",
    "gsd_hmk_pairs",
    "wdf_lsg_pairs",
    "wdf_hmk_pairs",
    "sd_sm_at",
    "wigner_oracle",
    "gsd_oracle",
    "wigner_oracle_grid",
    "gsd_oracle_grid",
    "suggested_input_halfwidth",
    "suggested_freq_halfwidth",
    "write_grid_csv",
]


class NotIntegrable(ValueError):
    """The kernel has no integrable spectral density (zero envelope width)."""


class WindowTooSmall(ValueError):
    """Quadrature window truncates non-negligible integrand mass."""


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform evaluation lattice, one (min, max, points) triple per axis."""

    mins: tuple[float, ...]
    maxs: tuple[float, ...]
    points: tuple[int, ...]

    def __post_init__(self):
        mins = tuple(float(v) for v in np.atleast_1d(self.mins))
        maxs = tuple(float(v) for v in np.atleast_1d(self.maxs))
        pts = tuple(int(v) for v in np.atleast_1d(self.points))
        if not len(mins) == len(maxs) == len(pts):
            raise ValueError("mins/maxs/points must have equal length")
        if any(lo >= hi for lo, hi in zip(mins, maxs)):
            raise ValueError("each axis needs min < max")
        if any(p < 2 for p in pts):
            raise ValueError("each axis needs at least 2 points")
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return len(self.mins)

    def axes(self) -> list[NDArray[np.float64]]:
        return [
            np.linspace(lo, hi, p)
            for lo, hi, p in zip(self.mins, self.maxs, self.points)
        ]


def _normal_density(v: np.ndarray, var_diag: np.ndarray) -> np.ndarray:
    """Product of independent zero-mean normal densities along the last axis."""
    var = np.broadcast_to(np.asarray(var_diag, dtype=np.float64), v.shape)
    norm = np.prod(2.0 * np.pi * var, axis=-1) ** -0.5
    return norm * np.exp(-0.5 * np.sum(v * v / var, axis=-1))


def _rows(a: ArrayLike) -> np.ndarray:
    out = np.atleast_2d(np.asarray(a, dtype=np.float64))
    return out


def _require_integrable(p: LSGParams) -> None:
    if not p.integrable:
        raise NotIntegrable(
            "spectral density exists only for strictly positive sigma1_diag and lambda2"
        )


# ---------------------------------------------------------------------------
# closed forms, vectorized over paired rows
# ---------------------------------------------------------------------------


def gsd_lsg_pairs(w: ArrayLike, xi: ArrayLike, p: LSGParams) -> NDArray[np.float64]:
    """LSG generalized spectral density on paired (N, D) frequency rows."""
    _require_integrable(p)
    w, xi = _rows(w), _rows(xi)
    return _normal_density(0.5 * (w + xi), np.full(p.dim, p.lambda2)) * _normal_density(
        w - xi, p.sigma1_diag
    )


def gsd_lsg(omega: ArrayLike, xi: ArrayLike, p: LSGParams) -> float:
    return float(gsd_lsg_pairs(omega, xi, p)[0])


def _gsd_hmk_complex(w: np.ndarray, xi: np.ndarray, p: HMKParams) -> np.ndarray:
    out = np.zeros(w.shape[0], dtype=np.complex128)
    for comp in p.components:
        _require_integrable(comp.lsg)
        gamma = comp.gamma
        scale = 1.0 / np.prod(gamma) ** 2
        phase = np.exp(-2j * np.pi * ((w - xi) @ comp.center))
        b = comp.amplitude
        acc = np.zeros(w.shape[0], dtype=np.complex128)
        for i in range(comp.n_freqs):
            wi = (w - comp.mu[i]) / gamma
            for j in range(comp.n_freqs):
                xj = (xi - comp.mu[j]) / gamma
                acc += b[i, j] * gsd_lsg_pairs(wi, xj, comp.lsg)
        out += phase * scale * acc
    return out


def gsd_hmk_pairs(w: ArrayLike, xi: ArrayLike, p: HMKParams) -> NDArray[np.complex128]:
    """HMK generalized spectral density on paired (N, D) frequency rows."""
    w, xi = _rows(w), _rows(xi)
    if p.real_valued:
        return 0.5 * (
            _gsd_hmk_complex(w, xi, p) + np.conj(_gsd_hmk_complex(-w, -xi, p))
        )
    return _gsd_hmk_complex(w, xi, p)


def gsd_hmk(omega: ArrayLike, xi: ArrayLike, p: HMKParams) -> complex:
    return complex(gsd_hmk_pairs(omega, xi, p)[0])


def wdf_lsg_pairs(x: ArrayLike, w: ArrayLike, p: LSGParams) -> NDArray[np.float64]:
    """LSG Wigner distribution on paired (N, D) input/frequency rows."""
    x, w = _rows(x), _rows(w)
    env = np.exp(-TWO_PI_SQ * np.sum(x * x * p.sigma1_diag, axis=-1))
    return _normal_density(w, np.full(p.dim, p.lambda2)) * env


def wdf_lsg(x: ArrayLike, omega: ArrayLike, p: LSGParams) -> float:
    return float(wdf_lsg_pairs(x, omega, p)[0])


def _wdf_hmk_one_sign(x: np.ndarray, w: np.ndarray, p: HMKParams) -> np.ndarray:
    out = np.zeros(x.shape[0], dtype=np.float64)
    for comp in p.components:
        gamma = comp.gamma
        xs = x - comp.center
        scale = 1.0 / np.prod(gamma)
        b = comp.amplitude
        for i in range(comp.n_freqs):
            for j in range(comp.n_freqs):
                carrier = (comp.mu[i] + comp.mu[j]) / 2.0
                weight = np.real(
                    b[i, j] * np.exp(2j * np.pi * (xs @ (comp.mu[i] - comp.mu[j])))
                )
                out += scale * weight * wdf_lsg_pairs(
                    xs * gamma, (w - carrier) / gamma, comp.lsg
                )
    return out


def wdf_hmk_pairs(x: ArrayLike, w: ArrayLike, p: HMKParams) -> NDArray[np.float64]:
    """HMK Wigner distribution on paired (N, D) input/frequency rows."""
    x, w = _rows(x), _rows(w)
    if p.real_valued:
        return 0.5 * (_wdf_hmk_one_sign(x, w, p) + _wdf_hmk_one_sign(x, -w, p))
    return _wdf_hmk_one_sign(x, w, p)


def wdf_hmk(x: ArrayLike, omega: ArrayLike, p: HMKParams) -> float:
    return float(wdf_hmk_pairs(x, omega, p)[0])


def sd_sm_at(xi: ArrayLike, p: SMParams) -> NDArray[np.float64]:
    """Symmetric spectral density of the spectral mixture on (N, D) rows."""
    xi = _rows(xi)
    out = np.zeros(xi.shape[0], dtype=np.float64)
    for q in range(p.n_components):
        out += 0.5 * p.weights[q] * (
            _normal_density(xi - p.means[q], p.scales[q])
            + _normal_density(xi + p.means[q], p.scales[q])
        )
    return out


def sd_sm(xi: ArrayLike, p: SMParams) -> float:
    return float(sd_sm_at(xi, p)[0])


# ---------------------------------------------------------------------------
# quadrature oracles (trapezoid rule; test/validation use)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureConfig:
    """Uniform trapezoid window [-half_width, half_width] with ``nodes`` points."""

    half_width: float
    nodes: int = 400

    def __post_init__(self):
        if self.half_width <= 0 or self.nodes < 8:
            raise ValueError("need positive half_width and at least 8 nodes")

    def axis(self) -> NDArray[np.float64]:
        return np.linspace(-self.half_width, self.half_width, self.nodes)


BOUNDARY_DECAY = 1e-6


def _check_window(mag: np.ndarray, boundary_mag: float) -> None:
    peak = float(mag.max(initial=0.0))
    if peak > 0 and boundary_mag > BOUNDARY_DECAY * peak:
        raise WindowTooSmall(
            f"boundary integrand magnitude {boundary_mag:.3e} exceeds "
            f"{BOUNDARY_DECAY:.0e} of peak {peak:.3e}; enlarge the window"
        )


PairKernel = Callable[[np.ndarray, np.ndarray], np.ndarray]


def wigner_oracle(
    kernel: PairKernel, x: float, omega: float, cfg: QuadratureConfig
) -> complex:
    """Trapezoid value of \\int k(x+tau/2, x-tau/2) exp(-2 i pi w tau) dtau.

    ``kernel`` must map paired (N, 1) input arrays to an (N,) array.
    One-dimensional inputs only.
    """
    return complex(wigner_oracle_grid(kernel, np.array([x]), np.array([omega]), cfg)[0, 0])


def wigner_oracle_grid(
    kernel: PairKernel,
    x_axis: ArrayLike,
    omega_axis: ArrayLike,
    cfg: QuadratureConfig,
) -> NDArray[np.complex128]:
    """Wigner oracle on a 1-D grid, shape (len(x_axis), len(omega_axis))."""
    x_axis = np.asarray(x_axis, dtype=np.float64).reshape(-1)
    omega_axis = np.asarray(omega_axis, dtype=np.float64).reshape(-1)
    tau = cfg.axis()
    dt = tau[1] - tau[0]
    xa = (x_axis[:, None] + tau[None, :] / 2).reshape(-1, 1)
    xb = (x_axis[:, None] - tau[None, :] / 2).reshape(-1, 1)
    vals = np.asarray(kernel(xa, xb)).reshape(len(x_axis), len(tau))
    mag = np.abs(vals)
    _check_window(mag, float(np.max(mag[:, [0, -1]], initial=0.0)))
    weights = np.full(len(tau), dt)
    weights[[0, -1]] = dt / 2
    phases = np.exp(-2j * np.pi * np.outer(tau, omega_axis))
    return (vals * weights) @ phases


def gsd_oracle(
    kernel: PairKernel, omega: float, xi: float, cfg: QuadratureConfig
) -> complex:
    """Trapezoid value of the double Fourier integral
    \\int\\int k(x, x') exp(-2 i pi (w x - xi x')) dx dx' (1-D inputs)."""
    return complex(gsd_oracle_grid(kernel, np.array([omega]), np.array([xi]), cfg)[0, 0])


def gsd_oracle_grid(
    kernel: PairKernel,
    omega_axis: ArrayLike,
    xi_axis: ArrayLike,
    cfg: QuadratureConfig,
) -> NDArray[np.complex128]:
    """GSD oracle on a 1-D grid, shape (len(omega_axis), len(xi_axis)).

    Evaluates the kernel once on the quadrature lattice and applies the two
    Fourier sums as matrix products.
    """
    omega_axis = np.asarray(omega_axis, dtype=np.float64).reshape(-1)
    xi_axis = np.asarray(xi_axis, dtype=np.float64).reshape(-1)
    x = cfg.axis()
    dx = x[1] - x[0]
    xa, xb = np.meshgrid(x, x, indexing="ij")
    vals = np.asarray(kernel(xa.reshape(-1, 1), xb.reshape(-1, 1))).reshape(len(x), len(x))
    mag = np.abs(vals)
    boundary = max(
        float(mag[0].max()), float(mag[-1].max()), float(mag[:, 0].max()), float(mag[:, -1].max())
    )
    _check_window(mag, boundary)
    weights = np.full(len(x), dx)
    weights[[0, -1]] = dx / 2
    left = np.exp(-2j * np.pi * np.outer(omega_axis, x)) * weights  # (nw, nx)
    right = np.exp(2j * np.pi * np.outer(x, xi_axis)) * weights[:, None]  # (nx, nxi)
    return left @ vals @ right


# window sizing: a Gaussian factor exp(-2 pi^2 v t^2) falls below 1e-8 of its
# peak for |t| > 6 / sqrt(2 pi^2 v); windows add the component center span.


def _six_sigma(v: float) -> float:
    return 6.0 / math.sqrt(2.0 * math.pi**2 * v)


def suggested_input_halfwidth(p: HMKParams | LSGParams) -> float:
    """Input-domain window that captures the kernel mass of every component."""
    if isinstance(p, LSGParams):
        comps = [(np.zeros(p.dim), np.ones(p.dim), p)]
    else:
        comps = [(c.center, c.gamma, c.lsg) for c in p.components]
    half = 0.0
    for center, gamma, lsg in comps:
        sig_min = float(np.min(lsg.sigma1_diag * gamma**2))
        lam_min = float(np.min(lsg.lambda2 * gamma**2))
        if sig_min <= 0 or lam_min <= 0:
            raise NotIntegrable("window sizing needs strictly positive widths")
        span = float(np.max(np.abs(center), initial=0.0))
        half = max(half, span + _six_sigma(sig_min) + 0.5 * _six_sigma(lam_min))
    return half


def suggested_freq_halfwidth(p: HMKParams | LSGParams) -> float:
    """Frequency-domain window covering every spectral lobe of the kernel."""
    if isinstance(p, LSGParams):
        comps = [(np.zeros((1, p.dim)), np.ones(p.dim), p)]
    else:
        comps = [(c.mu, c.gamma, c.lsg) for c in p.components]
    half = 0.0
    for mu, gamma, lsg in comps:
        g_max = float(np.max(gamma))
        spread = 6.0 * g_max * math.sqrt(
            float(np.max(lsg.sigma1_diag)) + float(lsg.lambda2)
        )
        half = max(half, float(np.max(np.abs(mu), initial=0.0)) + spread)
    return half


# ---------------------------------------------------------------------------
# grid dumps
# ---------------------------------------------------------------------------


def write_grid_csv(
    path,
    header: tuple[str, str],
    coords1: ArrayLike,
    coords2: ArrayLike,
    values: ArrayLike,
) -> None:
    """Write a row-major grid dump: columns (coord1, coord2, re, im).

    ``values`` has shape (len(coords1), len(coords2)); real grids get a zero
    imaginary column so every dump shares one schema.
    """
    c1 = np.asarray(coords1, dtype=np.float64).reshape(-1)
    c2 = np.asarray(coords2, dtype=np.float64).reshape(-1)
    vals = np.asarray(values)
    if vals.shape != (c1.size, c2.size):
        raise ValueError(f"values shape {vals.shape} does not match grid {c1.size}x{c2.size}")
    a = np.repeat(c1, c2.size)
    b = np.tile(c2, c1.size)
    flat = vals.reshape(-1)
    re = np.real(flat)
    im = np.imag(flat) if np.iscomplexobj(flat) else np.zeros_like(re)
    table = np.column_stack([a, b, re, im])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{header[0]},{header[1]},re,im\n")
        for row in table:
            fh.write(f"{row[0]!r},{row[1]!r},{row[2]!r},{row[3]!r}\n")
