"""Kernel families: stationary mixtures, locally stationary Gaussians, and
harmonizable mixtures, plus the fixed non-stationary recovery targets.

Closed forms (inputs x, x' in R^D, centroid xt = (x+x')/2, lag tau = x-x'):

* squared exponential      k(tau) = s2 * exp(-|tau|^2 / (2 l^2))
* sparse spectral          k(tau) = sum_q a_q cos(2 pi w_q . tau)
                           (complex variant: a_q exp(2 i pi w_q . tau))
* spectral mixture         k(tau) = sum_q a_q exp(-2 pi^2 tau.Sq.tau) cos(2 pi w_q . tau)
* generalized spectral     k(tau) = sum_q a_q h(tau*g_q) exp(2 i pi w_q . tau)
* locally stationary       k(x,x') = exp(-2 pi^2 xt.S1.xt) exp(-2 pi^2 tau.S2.tau)
  Gaussian (LSG)           with S1 = diag(sigma1), S2 = lambda2 * I
* harmonizable mixture     k(x,x') = sum_p kp(x - c_p, x' - c_p)
  (HMK)                    kp(x,x') = lsg(x*g_p, x'*g_p) * phi_p(x)^T B_p conj(phi_p(x'))
                           phi_p(x)_q = exp(2 i pi mu_pq . x),  B_p = L_p L_p^H

The conjugate on the second feature map is what makes each component a valid
Hermitian PSD kernel; a real-valued kernel is the average of the complex one
with its conjugate, i.e. its real part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import jax.numpy as jnp
import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = [
    "DomainViolation",
    "NonPositiveLengthscale",
    "LSGParams",
    "SMParams",
    "HMKComponent",
    "HMKParams",
    "eval_se",
    "eval_ss",
    "eval_sm",
    "eval_gs",
    "eval_lsg",
    "eval_hmk",
    "lsg_pairs",
    "hmk_pairs",
    "hmk_gram",
    "sm_gram",
    "se_gram",
    "hmk_diag",
    "eval_gsm_target",
    "gsm_default_funcs",
    "gsm_target_pairs",
    "eval_ifbm_target",
    "ifbm_target_pairs",
    "sm_of_record",
    "sample_hmk",
]

TWO_PI_SQ = 2.0 * math.pi**2
TWO_PI = 2.0 * math.pi


class DomainViolation(ValueError):
    """An input lies outside a target kernel's declared domain."""


class NonPositiveLengthscale(ValueError):
    """A lengthscale function returned a non-positive value."""


# ---------------------------------------------------------------------------
# parameter containers
# ---------------------------------------------------------------------------


def _as_1d(a: ArrayLike, name: str) -> NDArray[np.float64]:
    out = np.atleast_1d(np.asarray(a, dtype=np.float64))
    if out.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} must be finite")
    return out


@dataclass(frozen=True)
class LSGParams:
    """Locally stationary Gaussian kernel parameters.

    ``sigma1_diag`` is the diagonal of the centroid-envelope matrix S1 and
    ``lambda2`` the isotropic lag-decay coefficient (S2 = lambda2 * I); both
    carry units 1/input^2.  ``sigma1_diag = 0`` is the stationary limit (the
    kernel then depends on x - x' only, but has no integrable spectral
    density).
    """

    sigma1_diag: NDArray[np.float64]
    lambda2: float

    def __post_init__(self):
        sig = _as_1d(self.sigma1_diag, "sigma1_diag")
        if np.any(sig < 0):
            raise ValueError("sigma1_diag entries must be nonnegative")
        lam = float(self.lambda2)
        if lam < 0 or not math.isfinite(lam):
            raise ValueError("lambda2 must be a nonnegative finite real")
        sig.flags.writeable = False
        object.__setattr__(self, "sigma1_diag", sig)
        object.__setattr__(self, "lambda2", lam)

    @property
    def dim(self) -> int:
        return self.sigma1_diag.shape[0]

    @property
    def integrable(self) -> bool:
        """True when the kernel is integrable (strictly positive envelope)."""
        return bool(np.all(self.sigma1_diag > 0) and self.lambda2 > 0)


@dataclass(frozen=True)
class SMParams:
    """Spectral mixture kernel parameters: weights a_q > 0, mean frequencies
    w_q (cycles/input) and diagonal frequency covariances Sq > 0."""

    weights: NDArray[np.float64]
    means: NDArray[np.float64]
    scales: NDArray[np.float64]

    def __post_init__(self):
        w = _as_1d(self.weights, "weights")
        mu = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        sc = np.atleast_2d(np.asarray(self.scales, dtype=np.float64))
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        if mu.shape != sc.shape or mu.shape[0] != w.shape[0]:
            raise ValueError(
                f"shape mismatch: weights {w.shape}, means {mu.shape}, scales {sc.shape}"
            )
        if np.any(sc <= 0):
            raise ValueError("frequency covariance diagonals must be positive")
        for a in (w, mu, sc):
            a.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "scales", sc)

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True)
class HMKComponent:
    """One additive component of a harmonizable mixture kernel.

    Fields: input shift ``center`` (D,), input scaling ``gamma`` (D,) > 0,
    frequencies ``mu`` (Q, D) in cycles/input, complex lower-triangular
    ``b_chol`` (Q, Q) whose Gram ``B = b_chol @ b_chol^H`` is the Hermitian
    PSD amplitude matrix, and the LSG envelope parameters.
    """

    center: NDArray[np.float64]
    gamma: NDArray[np.float64]
    mu: NDArray[np.float64]
    b_chol: NDArray[np.complex128]
    lsg: LSGParams

    def __post_init__(self):
        c = _as_1d(self.center, "center")
        g = _as_1d(self.gamma, "gamma")
        mu = np.atleast_2d(np.asarray(self.mu, dtype=np.float64))
        bl = np.asarray(self.b_chol, dtype=np.complex128)
        if np.any(g <= 0):
            raise ValueError("gamma must be strictly positive elementwise")
        d = c.shape[0]
        if g.shape[0] != d or mu.shape[1] != d or self.lsg.dim != d:
            raise ValueError("inconsistent input dimension across component fields")
        q = mu.shape[0]
        if bl.shape != (q, q):
            raise ValueError(f"b_chol must be ({q}, {q}), got {bl.shape}")
        if np.abs(np.triu(bl, k=1)).max(initial=0.0) > 0:
            raise ValueError("b_chol must be lower triangular")
        for a in (c, g, mu, bl):
            a.flags.writeable = False
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "b_chol", bl)

    @property
    def n_freqs(self) -> int:
        return self.mu.shape[0]

    @property
    def amplitude(self) -> NDArray[np.complex128]:
        """The Hermitian PSD amplitude matrix B = L L^H."""
        return self.b_chol @ self.b_chol.conj().T


@dataclass(frozen=True)
class HMKParams:
    """Harmonizable mixture kernel: components plus the real-valued flag.

    With ``real_valued`` set, evaluations return the average of the complex
    kernel with its conjugate (its real part), which is a real symmetric PSD
    kernel.
    """

    components: tuple[HMKComponent, ...]
    real_valued: bool = True

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("at least one component required")
        d = comps[0].center.shape[0]
        if any(c.center.shape[0] != d for c in comps):
            raise ValueError("components disagree on input dimension")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "real_valued", bool(self.real_valued))

    @property
    def dim(self) -> int:
        return self.components[0].center.shape[0]

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def integrable(self) -> bool:
        return all(c.lsg.integrable for c in self.components)


# ---------------------------------------------------------------------------
# value pytrees (jax-side parameter representation)
# ---------------------------------------------------------------------------


def hmk_to_vals(p: HMKParams) -> tuple[dict, ...]:
    """HMKParams -> tuple of per-component dicts of jnp arrays.

    The tuple-of-dicts form is a jax pytree, so kernel evaluation can be
    jitted and differentiated with respect to every entry.
    """
    vals = []
    for c in p.components:
        vals.append(
            dict(
                center=jnp.asarray(c.center),
                gamma=jnp.asarray(c.gamma),
                sigma1=jnp.asarray(c.lsg.sigma1_diag),
                lam2=jnp.asarray(c.lsg.lambda2),
                mu=jnp.asarray(c.mu),
                bl_re=jnp.asarray(c.b_chol.real),
                bl_im=jnp.asarray(c.b_chol.imag),
            )
        )
    return tuple(vals)


def vals_to_hmk(vals: Sequence[dict], real_valued: bool) -> HMKParams:
    """Inverse of :func:`hmk_to_vals`."""
    comps = []
    for v in vals:
        q = np.asarray(v["mu"]).shape[0]
        bl = np.tril(np.asarray(v["bl_re"]) + 1j * np.asarray(v["bl_im"]))
        comps.append(
            HMKComponent(
                center=np.asarray(v["center"]),
                gamma=np.asarray(v["gamma"]),
                mu=np.asarray(v["mu"]).reshape(q, -1),
                b_chol=bl,
                lsg=LSGParams(np.asarray(v["sigma1"]), float(v["lam2"])),
            )
        )
    return HMKParams(tuple(comps), real_valued=real_valued)


def _comp_amplitude(v: dict) -> jnp.ndarray:
    bl = jnp.tril(v["bl_re"] + 1j * v["bl_im"])
    return bl @ bl.conj().T


def lsg_pairs_core(xa, xb, sigma1, lam2):
    """LSG kernel on row-paired inputs xa, xb of shape (N, D) -> (N,)."""
    xt = 0.5 * (xa + xb)
    tau = xa - xb
    quad = jnp.sum(xt * xt * sigma1, axis=-1) + lam2 * jnp.sum(tau * tau, axis=-1)
    return jnp.exp(-TWO_PI_SQ * quad)


def hmk_pairs_core(vals, xa, xb, real_valued: bool):
    """Complex HMK values on row-paired inputs (N, D) -> (N,) complex."""
    out = jnp.zeros(xa.shape[:-1], dtype=jnp.complex128)
    for v in vals:
        ta = xa - v["center"]
        tb = xb - v["center"]
        env = lsg_pairs_core(ta * v["gamma"], tb * v["gamma"], v["sigma1"], v["lam2"])
        pa = jnp.exp(2j * jnp.pi * (ta @ v["mu"].T))  # (N, Q)
        pb = jnp.exp(2j * jnp.pi * (tb @ v["mu"].T))
        b = _comp_amplitude(v)
        mod = jnp.einsum("...q,qr,...r->...", pa, b, pb.conj())
        out = out + env * mod
    if real_valued:
        out = out.real.astype(jnp.complex128)
    return out


def hmk_diag_core(vals, x, real_valued: bool):
    """k(x, x) on rows of x, shape (N, D) -> (N,) real."""
    return hmk_pairs_core(vals, x, x, real_valued).real


def sm_gram_core(weights, means, scales, xa, xb):
    """Spectral mixture Gram matrix, (n, D) x (m, D) -> (n, m) real."""
    tau = xa[:, None, :] - xb[None, :, :]  # (n, m, D)
    quad = jnp.einsum("nmd,qd->qnm", tau * tau, scales)
    phase = jnp.einsum("nmd,qd->qnm", tau, means)
    terms = weights[:, None, None] * jnp.exp(-TWO_PI_SQ * quad) * jnp.cos(TWO_PI * phase)
    return jnp.sum(terms, axis=0)


def se_gram_core(variance, lengthscale, xa, xb):
    """Squared exponential Gram matrix."""
    tau = xa[:, None, :] - xb[None, :, :]
    sq = jnp.sum(tau * tau, axis=-1)
    return variance * jnp.exp(-0.5 * sq / (lengthscale**2))


# ---------------------------------------------------------------------------
# public evaluators (numpy in, python scalars / numpy arrays out)
# ---------------------------------------------------------------------------


def _pair_arrays(x: ArrayLike, x2: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    xa = np.atleast_2d(np.asarray(x, dtype=np.float64))
    xb = np.atleast_2d(np.asarray(x2, dtype=np.float64))
    if xa.shape != xb.shape:
        raise ValueError(f"paired inputs must share a shape, got {xa.shape} vs {xb.shape}")
    return xa, xb


def eval_se(tau: ArrayLike, variance: float = 1.0, lengthscale: float = 1.0) -> float:
    tau = _as_1d(tau, "tau")
    return float(variance * math.exp(-0.5 * float(tau @ tau) / lengthscale**2))


def eval_ss(
    tau: ArrayLike,
    weights: ArrayLike,
    freqs: ArrayLike,
    *,
    complex_valued: bool = False,
):
    """Sparse spectral kernel sum_q a_q cos(2 pi w_q . tau).

    With ``complex_valued`` the complex exponential variant
    sum_q a_q exp(2 i pi w_q . tau) is returned instead.
    """
    tau = _as_1d(tau, "tau")
    w = _as_1d(weights, "weights")
    f = np.atleast_2d(np.asarray(freqs, dtype=np.float64))
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    phase = TWO_PI * (f @ tau)
    if complex_valued:
        return complex(np.sum(w * np.exp(1j * phase)))
    return float(np.sum(w * np.cos(phase)))


def eval_sm(tau: ArrayLike, p: SMParams) -> float:
    tau = _as_1d(tau, "tau")
    quad = np.sum(p.scales * tau**2, axis=1)
    phase = TWO_PI * (p.means @ tau)
    return float(np.sum(p.weights * np.exp(-TWO_PI_SQ * quad) * np.cos(phase)))


def eval_gs(
    tau: ArrayLike,
    weights: ArrayLike,
    freqs: ArrayLike,
    gammas: ArrayLike,
    envelope: Callable[[np.ndarray], float],
) -> complex:
    """Generalized spectral kernel sum_q a_q h(tau*g_q) exp(2 i pi w_q . tau).

    ``envelope`` is a stationary-kernel callable; it is normalized so that
    h(0) = 1, which makes g_q -> 0 degrade each term to the sparse spectral
    one exactly.
    """
    tau = _as_1d(tau, "tau")
    w = _as_1d(weights, "weights")
    f = np.atleast_2d(np.asarray(freqs, dtype=np.float64))
    g = np.atleast_2d(np.asarray(gammas, dtype=np.float64))
    h0 = envelope(np.zeros_like(tau))
    out = 0j
    for q in range(w.shape[0]):
        out += (
            w[q]
            * (envelope(tau * g[q]) / h0)
            * np.exp(2j * np.pi * float(f[q] @ tau))
        )
    return complex(out)


def eval_lsg(x: ArrayLike, x2: ArrayLike, p: LSGParams) -> float:
    xa, xb = _pair_arrays(x, x2)
    val = lsg_pairs_core(jnp.asarray(xa), jnp.asarray(xb), jnp.asarray(p.sigma1_diag), p.lambda2)
    return float(np.asarray(val)[0])


def lsg_pairs(xa: ArrayLike, xb: ArrayLike, p: LSGParams) -> NDArray[np.float64]:
    """Vectorized LSG on row-paired (N, D) inputs."""
    xa, xb = _pair_arrays(xa, xb)
    return np.asarray(
        lsg_pairs_core(jnp.asarray(xa), jnp.asarray(xb), jnp.asarray(p.sigma1_diag), p.lambda2)
    )


def eval_hmk(x: ArrayLike, x2: ArrayLike, p: HMKParams) -> complex:
    xa, xb = _pair_arrays(x, x2)
    val = hmk_pairs_core(hmk_to_vals(p), jnp.asarray(xa), jnp.asarray(xb), p.real_valued)
    return complex(np.asarray(val)[0])


def hmk_pairs(xa: ArrayLike, xb: ArrayLike, p: HMKParams) -> NDArray[np.complex128]:
    """Vectorized HMK on row-paired (N, D) inputs -> (N,) complex."""
    xa, xb = _pair_arrays(xa, xb)
    return np.asarray(hmk_pairs_core(hmk_to_vals(p), jnp.asarray(xa), jnp.asarray(xb), p.real_valued))


def hmk_gram(x: ArrayLike, x2: ArrayLike, p: HMKParams) -> NDArray[np.complex128]:
    """Dense HMK Gram matrix on (n, D) x (m, D) inputs."""
    xa = np.atleast_2d(np.asarray(x, dtype=np.float64))
    xb = np.atleast_2d(np.asarray(x2, dtype=np.float64))
    pa = np.repeat(xa, xb.shape[0], axis=0)
    pb = np.tile(xb, (xa.shape[0], 1))
    out = hmk_pairs(pa, pb, p)
    return out.reshape(xa.shape[0], xb.shape[0])


def hmk_diag(x: ArrayLike, p: HMKParams) -> NDArray[np.float64]:
    """k(x, x) on rows of x; real for any HMK (Hermitian diagonal)."""
    xa = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return np.asarray(hmk_diag_core(hmk_to_vals(p), jnp.asarray(xa), p.real_valued))


def sm_gram(x: ArrayLike, x2: ArrayLike, p: SMParams) -> NDArray[np.float64]:
    xa = np.atleast_2d(np.asarray(x, dtype=np.float64))
    xb = np.atleast_2d(np.asarray(x2, dtype=np.float64))
    return np.asarray(
        sm_gram_core(
            jnp.asarray(p.weights), jnp.asarray(p.means), jnp.asarray(p.scales),
            jnp.asarray(xa), jnp.asarray(xb),
        )
    )


def se_gram(x: ArrayLike, x2: ArrayLike, variance: float = 1.0, lengthscale: float = 1.0) -> NDArray[np.float64]:
    xa = np.atleast_2d(np.asarray(x, dtype=np.float64))
    xb = np.atleast_2d(np.asarray(x2, dtype=np.float64))
    return np.asarray(se_gram_core(variance, lengthscale, jnp.asarray(xa), jnp.asarray(xb)))


# ---------------------------------------------------------------------------
# recovery targets
# ---------------------------------------------------------------------------


def gsm_default_funcs() -> dict[str, Callable[[np.ndarray], np.ndarray]]:
    """Default weight/lengthscale/frequency functions for the chirp target:
    unit weight, constant lengthscale 0.3, frequency sweep 0.5 + 0.4 x."""
    return {
        "w": lambda x: np.ones_like(x),
        "ell": lambda x: np.full_like(x, 0.3),
        "mu": lambda x: 0.5 + 0.4 * x,
    }


def eval_gsm_target(
    x: float,
    x2: float,
    funcs: dict[str, Callable[[np.ndarray], np.ndarray]] | None = None,
) -> float:
    """Input-dependent-frequency target kernel on scalars:

    k(x,x') = w(x) w(x') * sqrt(2 l(x) l(x') / (l(x)^2 + l(x')^2))
              * exp(-(x-x')^2 / (l(x)^2 + l(x')^2))
              * cos(2 pi (mu(x) x - mu(x') x'))
    """
    return float(gsm_target_pairs(np.array([x]), np.array([x2]), funcs)[0])


def gsm_target_pairs(
    xa: ArrayLike,
    xb: ArrayLike,
    funcs: dict[str, Callable[[np.ndarray], np.ndarray]] | None = None,
) -> NDArray[np.float64]:
    """Vectorized chirp target on paired 1-D inputs."""
    funcs = funcs or gsm_default_funcs()
    xa = np.asarray(xa, dtype=np.float64).reshape(-1)
    xb = np.asarray(xb, dtype=np.float64).reshape(-1)
    la, lb = funcs["ell"](xa), funcs["ell"](xb)
    if np.any(la <= 0) or np.any(lb <= 0):
        raise NonPositiveLengthscale("lengthscale function must be positive on the domain")
    denom = la**2 + lb**2
    gibbs = np.sqrt(2.0 * la * lb / denom) * np.exp(-((xa - xb) ** 2) / denom)
    phase = TWO_PI * (funcs["mu"](xa) * xa - funcs["mu"](xb) * xb)
    return funcs["w"](xa) * funcs["w"](xb) * gibbs * np.cos(phase)


IFBM_DOMAIN = (0.1, 1.1)


def eval_ifbm_target(t: float, s: float, h: float = 0.5) -> float:
    """Covariance of a time-inverted fractional Brownian motion:

    k(t,s) = (t^{-2h} + s^{-2h} - |1/t - 1/s|^{2h}) / 2,  t, s in (0.1, 1.1].
    """
    return float(ifbm_target_pairs(np.array([t]), np.array([s]), h)[0])


def ifbm_target_pairs(ta: ArrayLike, tb: ArrayLike, h: float = 0.5) -> NDArray[np.float64]:
    ta = np.asarray(ta, dtype=np.float64).reshape(-1)
    tb = np.asarray(tb, dtype=np.float64).reshape(-1)
    lo, hi = IFBM_DOMAIN
    if not 0.0 < h < 1.0:
        raise DomainViolation(f"hurst parameter must lie in (0, 1), got {h}")
    if np.any(ta <= lo) or np.any(ta > hi) or np.any(tb <= lo) or np.any(tb > hi):
        raise DomainViolation(f"inputs must lie in ({lo}, {hi}]")
    inv_a, inv_b = 1.0 / ta, 1.0 / tb
    return 0.5 * (inv_a ** (2 * h) + inv_b ** (2 * h) - np.abs(inv_a - inv_b) ** (2 * h))


def sm_of_record() -> SMParams:
    """Fixed spectral mixture used as the stationary recovery sanity target."""
    return SMParams(
        weights=np.array([1.0, 0.5]),
        means=np.array([[0.25], [1.0]]),
        scales=np.array([[0.01], [0.04]]),
    )


# ---------------------------------------------------------------------------
# random draws (test properties and optimizer restarts)
# ---------------------------------------------------------------------------


def sample_hmk(
    rng: np.random.Generator,
    n_components: int,
    n_freqs: int,
    dim: int = 1,
    *,
    real_valued: bool = True,
    center_scale: float = 1.0,
    freq_scale: float = 1.0,
    amp_scale: float = 1.0,
) -> HMKParams:
    """Draw a random valid HMK (used for property tests and restarts)."""
    comps = []
    for _ in range(n_components):
        low = np.tril(
            rng.normal(size=(n_freqs, n_freqs)) + 1j * rng.normal(size=(n_freqs, n_freqs)),
            k=-1,
        )
        diag = np.diag(rng.uniform(0.3, 1.0, size=n_freqs))
        b_chol = (low * 0.3 + diag) * (amp_scale / math.sqrt(n_freqs))
        comps.append(
            HMKComponent(
                center=rng.uniform(-center_scale, center_scale, size=dim),
                gamma=rng.uniform(0.5, 1.5, size=dim),
                mu=rng.uniform(-freq_scale, freq_scale, size=(n_freqs, dim)),
                b_chol=b_chol,
                lsg=LSGParams(rng.uniform(0.2, 1.0, size=dim), float(rng.uniform(0.2, 1.0))),
            )
        )
    return HMKParams(tuple(comps), real_valued=real_valued)
