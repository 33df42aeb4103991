"""Inter-domain sparse GP inference with variational Fourier features.

The latent GP decomposes over mixture components, f(x) = sum_p f_p(x - c_p),
and each component GP has a well-defined Fourier transform because its
kernel is integrable.  Inducing variables are Fourier-transform evaluations
u_pj = fhat_p(w_pj) at chosen inducing frequencies, giving

* cross covariances  cov(f(x), u_pj) = conj( \\int k_p(t, x - c_p)
  exp(-2 i pi w_pj . t) dt ), available in closed form
  (Gaussian-times-phase with the input-dependent shift
  x0 = (S1 + 4 S2)^{-1} (4 S2 - S1) x), and
* self covariances   cov(u_pi, u_qj) = delta_pq * S_p(w_pi, w_qj), the
  component spectral density, hence a block-diagonal K_uu.

The inducing vector u is complex, so the variational posterior is a full
real Gaussian over the stacked coordinates [Re u; Im u] (no circular-
symmetry assumption).  The prior covariance of the stacked vector is taken
as the standard real embedding

    E(K) = [[Re K, -Im K], [Im K, Re K]],   F = [Re K_fu, -Im K_fu],

under which the joint [[K_ff, F], [F^T, E(K_uu)]] is PSD (a principal
submatrix of the embedded complex joint), so the evidence lower bounds
computed here are true lower bounds of the dense log marginal likelihood,
and the conditional mean/variance equal the real part of the complex
conditional algebra.

Only real-valued kernels are accepted: the observed targets are real, so
the latent f must be a real GP.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Sequence, Union

import jax
import jax.numpy as jnp
import numpy as np
from jax.scipy.linalg import cho_solve, solve_triangular
from numpy.typing import ArrayLike, NDArray

from . import linalg
from .kernels import HMKParams, hmk_diag_core, hmk_to_vals, vals_to_hmk
from .linalg import HermitianMatrix, NotPositiveDefinite
from .spectral import NotIntegrable

__all__ = [
    "InvalidTargets",
    "InducingFrequencies",
    "GaussianLikelihood",
    "BernoulliProbit",
    "Likelihood",
    "SparseGPState",
    "compute_kuu",
    "compute_kfu",
    "conditional",
    "elbo_stochastic",
    "collapsed_bound",
    "collapsed_fit",
    "predict",
    "kl_to_prior",
    "solve_kuu_blockwise",
    "save_checkpoint",
    "load_checkpoint",
]

#: relative jitter used inside differentiable code paths (fixed, jit-safe)
TRAIN_JITTER_REL = 1e-8

#: Gauss-Hermite node count for probit expectations
GH_NODES = 20

#: predictive variances in [-VAR_FLOOR_REL * k(x,x), 0) clamp to zero
VAR_FLOOR_REL = 1e-8

STACKING_NOTE = (
    "components in declaration order; frequencies in declaration order within "
    "a component; stacked real coordinates are all real parts then all "
    "imaginary parts"
)


class InvalidTargets(ValueError):
    """Classification targets must be in {0,1} or {-1,+1}."""


@dataclass(frozen=True)
class InducingFrequencies:
    """Per-component inducing frequencies, one (m_p, D) array per component."""

    freqs: tuple[NDArray[np.float64], ...]

    def __post_init__(self):
        fr = []
        for f in self.freqs:
            a = np.atleast_2d(np.asarray(f, dtype=np.float64))
            if a.shape[0] < 1:
                raise ValueError("each component needs at least one frequency")
            if not np.all(np.isfinite(a)):
                raise ValueError("inducing frequencies must be finite")
            a.flags.writeable = False
            fr.append(a)
        if not fr:
            raise ValueError("at least one component required")
        object.__setattr__(self, "freqs", tuple(fr))

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.freqs)

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def dim(self) -> int:
        return self.freqs[0].shape[1]


@dataclass(frozen=True)
class GaussianLikelihood:
    noise_var: float

    def __post_init__(self):
        if not self.noise_var > 0:
            raise ValueError("noise_var must be positive")


@dataclass(frozen=True)
class BernoulliProbit:
    """Bernoulli likelihood with a probit link, p(y=1|f) = Phi(f)."""


Likelihood = Union[GaussianLikelihood, BernoulliProbit]


@dataclass(frozen=True)
class SparseGPState:
    """Immutable snapshot of a sparse GP: kernel, inducing frequencies, and
    the variational Gaussian over stacked [Re u; Im u] coordinates.

    ``var_mean`` is the complex m-vector; ``var_cov`` is the full real
    (2m, 2m) covariance of the stacked coordinates (see ``STACKING_NOTE``).
    """

    kernel: HMKParams
    inducing: InducingFrequencies
    var_mean: NDArray[np.complex128]
    var_cov: NDArray[np.float64]
    noise_var: float | None = None

    def __post_init__(self):
        if len(self.inducing.freqs) != self.kernel.n_components:
            raise ValueError("inducing components must match kernel components")
        m = self.inducing.total
        mean = np.asarray(self.var_mean, dtype=np.complex128).reshape(m)
        cov = np.asarray(self.var_cov, dtype=np.float64)
        if cov.shape != (2 * m, 2 * m):
            raise ValueError(f"var_cov must be ({2*m}, {2*m}), got {cov.shape}")
        mean.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "var_mean", mean)
        object.__setattr__(self, "var_cov", cov)

    @property
    def n_inducing(self) -> int:
        return self.inducing.total

    @property
    def var_mean_stacked(self) -> NDArray[np.float64]:
        return np.concatenate([self.var_mean.real, self.var_mean.imag])

    @property
    def var_cov_hermitian(self) -> HermitianMatrix:
        """The complex Hermitian covariance E[(u-m)(u-m)^H] implied by the
        stacked real covariance."""
        m = self.n_inducing
        rr = self.var_cov[:m, :m]
        ii = self.var_cov[m:, m:]
        ri = self.var_cov[:m, m:]
        ir = self.var_cov[m:, :m]
        return HermitianMatrix((rr + ii) + 1j * (ir - ri))

    @classmethod
    def prior(
        cls,
        kernel: HMKParams,
        inducing: InducingFrequencies,
        noise_var: float | None = None,
    ) -> "SparseGPState":
        """State with q(u) equal to the prior (zero mean, S = E(K_uu))."""
        e = np.asarray(_kuu_embedded(hmk_to_vals(kernel), _freq_arrays(inducing), kernel.real_valued))
        m = inducing.total
        return cls(kernel, inducing, np.zeros(m, dtype=np.complex128), e, noise_var)


# ---------------------------------------------------------------------------
# jax cores: component spectral density, cross covariance, embeddings
# ---------------------------------------------------------------------------


def _freq_arrays(z: InducingFrequencies) -> tuple[jnp.ndarray, ...]:
    return tuple(jnp.asarray(f) for f in z.freqs)


def _comp_b(v: dict) -> jnp.ndarray:
    bl = jnp.tril(v["bl_re"] + 1j * v["bl_im"])
    return bl @ bl.conj().T


def _normal_prod(v: jnp.ndarray, var: jnp.ndarray) -> jnp.ndarray:
    return jnp.prod(2.0 * jnp.pi * var) ** -0.5 * jnp.exp(
        -0.5 * jnp.sum(v * v / var, axis=-1)
    )


def _gsd_component_complex(v: dict, w: jnp.ndarray, xi: jnp.ndarray) -> jnp.ndarray:
    """Spectral density of one (unshifted) component on paired rows."""
    gamma = v["gamma"]
    lam = jnp.broadcast_to(v["lam2"], gamma.shape)
    scale = jnp.prod(gamma) ** -2
    b = _comp_b(v)
    q = v["mu"].shape[0]
    acc = jnp.zeros(w.shape[0], dtype=jnp.complex128)
    for i in range(q):
        wi = (w - v["mu"][i]) / gamma
        for j in range(q):
            xj = (xi - v["mu"][j]) / gamma
            dens = _normal_prod(0.5 * (wi + xj), lam) * _normal_prod(wi - xj, v["sigma1"])
            acc = acc + b[i, j] * dens
    return scale * acc


def _gsd_component(v: dict, w, xi, real_valued: bool) -> jnp.ndarray:
    if real_valued:
        return 0.5 * (
            _gsd_component_complex(v, w, xi)
            + jnp.conj(_gsd_component_complex(v, -w, -xi))
        )
    return _gsd_component_complex(v, w, xi)


def _cross_component_complex(v: dict, t: jnp.ndarray, w: jnp.ndarray) -> jnp.ndarray:
    """cov(fhat_p(w), f_p(t)) for one component, (n, D) x (mp, D) -> (n, mp).

    Closed form: for each frequency-pair term, a product over dimensions of
    envelope * phase * Gaussian, with

        A = sb/4 + lb,  envelope = exp(-2 pi^2 t^2 sb lb / A),
        shift x0 = t (4 lb - sb) / (sb + 4 lb),  Gaussian = N(s | 0, A),

    where sb = gamma^2 * sigma1, lb = gamma^2 * lambda2, s = w - mu_i.
    """
    g2 = v["gamma"] ** 2
    sb = g2 * v["sigma1"]
    lb = g2 * v["lam2"]
    a = sb / 4.0 + lb
    env = jnp.exp(-2.0 * jnp.pi**2 * jnp.sum(t * t * (sb * lb / a), axis=-1))  # (n,)
    x0 = t * ((4.0 * lb - sb) / (sb + 4.0 * lb))  # (n, D)
    b = _comp_b(v)
    q = v["mu"].shape[0]
    phases_j = jnp.exp(-2j * jnp.pi * (t @ v["mu"].T))  # (n, q): e^{-2 i pi mu_j . t}
    weights = phases_j @ b.T  # (n, q): sum_j b_ij e^{-2 i pi mu_j . t} per i
    out = jnp.zeros((t.shape[0], w.shape[0]), dtype=jnp.complex128)
    for i in range(q):
        s = w - v["mu"][i]  # (mp, D)
        gauss = _normal_prod(s, a)  # (mp,)
        phase = jnp.exp(-2j * jnp.pi * (x0 @ s.T))  # (n, mp)
        out = out + weights[:, i : i + 1] * phase * gauss[None, :]
    return env[:, None] * out


def _cross_component(v: dict, t, w, real_valued: bool) -> jnp.ndarray:
    if real_valued:
        return 0.5 * (
            _cross_component_complex(v, t, w)
            + jnp.conj(_cross_component_complex(v, t, -w))
        )
    return _cross_component_complex(v, t, w)


def _kuu_blocks(vals, freqs, real_valued: bool) -> list[jnp.ndarray]:
    blocks = []
    for v, w in zip(vals, freqs):
        mp = w.shape[0]
        wi = jnp.repeat(w, mp, axis=0)
        wj = jnp.tile(w, (mp, 1))
        s = _gsd_component(v, wi, wj, real_valued).reshape(mp, mp)
        blocks.append(0.5 * (s + s.conj().T))
    return blocks


def _kuu_complex(vals, freqs, real_valued: bool) -> jnp.ndarray:
    blocks = _kuu_blocks(vals, freqs, real_valued)
    m = sum(b.shape[0] for b in blocks)
    out = jnp.zeros((m, m), dtype=jnp.complex128)
    at = 0
    for b in blocks:
        out = out.at[at : at + b.shape[0], at : at + b.shape[0]].set(b)
        at += b.shape[0]
    return out


def _kfu_complex(vals, x, freqs, real_valued: bool) -> jnp.ndarray:
    cols = []
    for v, w in zip(vals, freqs):
        t = x - v["center"]
        cols.append(jnp.conj(_cross_component(v, t, w, real_valued)))
    return jnp.concatenate(cols, axis=1)


def _embed_herm(k: jnp.ndarray) -> jnp.ndarray:
    re, im = k.real, k.imag
    return jnp.block([[re, -im], [im, re]])


def _embed_cross(kfu: jnp.ndarray) -> jnp.ndarray:
    return jnp.concatenate([kfu.real, -kfu.imag], axis=1)


def _kuu_embedded(vals, freqs, real_valued: bool) -> jnp.ndarray:
    e = _embed_herm(_kuu_complex(vals, freqs, real_valued))
    return 0.5 * (e + e.T)


def _kfu_embedded(vals, x, freqs, real_valued: bool) -> jnp.ndarray:
    return _embed_cross(_kfu_complex(vals, x, freqs, real_valued))


def _chol_jittered(e: jnp.ndarray, jitter_rel: float) -> jnp.ndarray:
    n = e.shape[0]
    jitter = jitter_rel * jnp.trace(e) / n
    return jnp.linalg.cholesky(e + jitter * jnp.eye(n))


def _marginals_core(vals, freqs, real_valued, m_c, s_c, x, jitter_rel):
    """Per-point predictive mean/variance of q(f) at rows of x."""
    e = _kuu_embedded(vals, freqs, real_valued)
    f = _kfu_embedded(vals, x, freqs, real_valued)
    kdiag = hmk_diag_core(vals, x, real_valued)
    lo = _chol_jittered(e, jitter_rel)
    v = solve_triangular(lo, f.T, lower=True)  # (2m, n)
    mean = f @ cho_solve((lo, True), m_c)
    b = cho_solve((lo, True), f.T)  # (2m, n) = E^{-1} F^T
    var = kdiag - jnp.sum(v * v, axis=0) + jnp.sum(b * (s_c @ b), axis=0)
    return mean, var


def _kl_core(m_c, s_c, e, jitter_rel):
    """KL[q || p] between 2m-dimensional real Gaussians, p = N(0, E)."""
    lo = _chol_jittered(e, jitter_rel)
    ls = jnp.linalg.cholesky(s_c)
    half = solve_triangular(lo, ls, lower=True)
    trace = jnp.sum(half * half)
    alpha = solve_triangular(lo, m_c, lower=True)
    quad = jnp.sum(alpha * alpha)
    logdet_e = 2.0 * jnp.sum(jnp.log(jnp.diag(lo)))
    logdet_s = 2.0 * jnp.sum(jnp.log(jnp.diag(ls)))
    dim = m_c.shape[0]
    return 0.5 * (trace + quad - dim + logdet_e - logdet_s)


_GH_T, _GH_W = np.polynomial.hermite.hermgauss(GH_NODES)


def _expected_ll_gaussian(y, mean, var, noise_var):
    return (
        -0.5 * jnp.log(2.0 * jnp.pi * noise_var)
        - ((y - mean) ** 2 + var) / (2.0 * noise_var)
    )


def _expected_ll_probit(y01, mean, var, gh_t, gh_w):
    sign = 2.0 * y01 - 1.0
    f = mean[:, None] + jnp.sqrt(2.0 * jnp.maximum(var, 0.0))[:, None] * gh_t[None, :]
    logp = jax.scipy.stats.norm.logcdf(sign[:, None] * f)
    return (logp @ gh_w) / jnp.sqrt(jnp.pi)


def _elbo_core_gaussian(vals, freqs, real_valued, m_c, s_c, x, y, noise_var, scale, jitter_rel):
    mean, var = _marginals_core(vals, freqs, real_valued, m_c, s_c, x, jitter_rel)
    ll = _expected_ll_gaussian(y, mean, jnp.maximum(var, 0.0), noise_var)
    e = _kuu_embedded(vals, freqs, real_valued)
    return scale * jnp.sum(ll) - _kl_core(m_c, s_c, e, jitter_rel)


def _elbo_core_probit(vals, freqs, real_valued, m_c, s_c, x, y01, scale, jitter_rel, gh_t, gh_w):
    mean, var = _marginals_core(vals, freqs, real_valued, m_c, s_c, x, jitter_rel)
    ll = _expected_ll_probit(y01, mean, var, gh_t, gh_w)
    e = _kuu_embedded(vals, freqs, real_valued)
    return scale * jnp.sum(ll) - _kl_core(m_c, s_c, e, jitter_rel)


def _collapsed_core(vals, freqs, real_valued, x, y, noise_var, jitter_rel):
    """Collapsed regression bound: the optimal-q evidence bound
    log N(y | 0, Q_ff + noise I) - trace(K_ff - Q_ff)/(2 noise)."""
    e = _kuu_embedded(vals, freqs, real_valued)
    f = _kfu_embedded(vals, x, freqs, real_valued)
    kdiag = hmk_diag_core(vals, x, real_valued)
    lo = _chol_jittered(e, jitter_rel)
    v = solve_triangular(lo, f.T, lower=True)  # (2m, n)
    n = x.shape[0]
    two_m = v.shape[0]
    b = jnp.eye(two_m) + (v @ v.T) / noise_var
    lb = jnp.linalg.cholesky(b)
    vy = v @ y
    c = solve_triangular(lb, vy, lower=True) / noise_var
    quad = (y @ y) / noise_var - c @ c
    logdet = 2.0 * jnp.sum(jnp.log(jnp.diag(lb))) + n * jnp.log(noise_var)
    fit = -0.5 * (n * jnp.log(2.0 * jnp.pi) + logdet + quad)
    trace_term = (jnp.sum(kdiag) - jnp.sum(v * v)) / (2.0 * noise_var)
    return fit - trace_term


# ---------------------------------------------------------------------------
# public surface
# ---------------------------------------------------------------------------


def _require_real(kernel: HMKParams, what: str) -> None:
    if not kernel.real_valued:
        raise ValueError(f"{what} requires a real-valued kernel (real targets)")


def _require_integrable(kernel: HMKParams) -> None:
    if not kernel.integrable:
        raise NotIntegrable(
            "variational Fourier features need an integrable kernel "
            "(strictly positive envelope widths)"
        )


def _check_match(kernel: HMKParams, z: InducingFrequencies) -> None:
    if len(z.freqs) != kernel.n_components:
        raise ValueError(
            f"kernel has {kernel.n_components} components but inducing set has {len(z.freqs)}"
        )
    if z.dim != kernel.dim:
        raise ValueError("inducing frequency dimension does not match kernel")


def compute_kuu(kernel: HMKParams, z: InducingFrequencies) -> HermitianMatrix:
    """Block-diagonal inducing covariance; block p is the component spectral
    density at the frequency pairs, zero across components."""
    _require_integrable(kernel)
    _check_match(kernel, z)
    k = _kuu_complex(hmk_to_vals(kernel), _freq_arrays(z), kernel.real_valued)
    return HermitianMatrix(np.asarray(k))


def compute_kfu(kernel: HMKParams, x: ArrayLike, z: InducingFrequencies) -> NDArray[np.complex128]:
    """Cross covariance cov(f(x_i), u_pj), shape (n, m)."""
    _require_integrable(kernel)
    _check_match(kernel, z)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    out = _kfu_complex(hmk_to_vals(kernel), jnp.asarray(x), _freq_arrays(z), kernel.real_valued)
    return np.asarray(out)


def solve_kuu_blockwise(kernel: HMKParams, z: InducingFrequencies, rhs: ArrayLike) -> NDArray[np.complex128]:
    """Solve K_uu X = rhs exploiting the block-diagonal structure."""
    _check_match(kernel, z)
    vals = hmk_to_vals(kernel)
    blocks = _kuu_blocks(vals, _freq_arrays(z), kernel.real_valued)
    rhs = np.asarray(rhs, dtype=np.complex128)
    out = np.zeros_like(rhs)
    at = 0
    for b in blocks:
        mp = b.shape[0]
        factor = linalg.cholesky_ladder(HermitianMatrix(np.asarray(b)))
        out[at : at + mp] = factor.solve(rhs[at : at + mp])
        at += mp
    return out


def _probe_jitter(e: np.ndarray) -> float:
    """Pick the ladder jitter (relative to trace/dim) that factorizes E."""
    factor = linalg.cholesky_ladder(HermitianMatrix(e.astype(np.complex128)))
    scale = float(np.trace(e)) / e.shape[0]
    return factor.jitter / scale if scale > 0 else 0.0


def conditional(x: ArrayLike, state: SparseGPState) -> tuple[NDArray, NDArray]:
    """Marginal predictive mean and variance of q(f) at rows of x.

    Variances get the checked clamp: values in [-1e-8 * k(x,x), 0) are set
    to zero, anything lower raises NotPositiveDefinite.
    """
    _require_real(state.kernel, "conditional")
    _require_integrable(state.kernel)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    vals = hmk_to_vals(state.kernel)
    freqs = _freq_arrays(state.inducing)
    e = np.asarray(_kuu_embedded(vals, freqs, state.kernel.real_valued))
    rel = max(_probe_jitter(e), 0.0)
    mean, var = _marginals_core(
        vals, freqs, state.kernel.real_valued,
        jnp.asarray(state.var_mean_stacked), jnp.asarray(state.var_cov),
        jnp.asarray(x), rel,
    )
    mean = np.asarray(mean)
    var = np.asarray(var)
    kdiag = np.asarray(hmk_diag_core(vals, jnp.asarray(x), True))
    floor = -VAR_FLOOR_REL * np.maximum(kdiag, 1e-300)
    if np.any(var < floor):
        raise NotPositiveDefinite(
            f"predictive variance {var.min():.3e} below clamp floor; "
            "inducing covariance or variational covariance is inconsistent"
        )
    return mean, np.maximum(var, 0.0)


def _normalize_targets(y: np.ndarray) -> np.ndarray:
    vals = set(np.unique(y).tolist())
    if vals <= {0.0, 1.0}:
        return y.astype(np.float64)
    if vals <= {-1.0, 1.0}:
        return ((y + 1.0) / 2.0).astype(np.float64)
    raise InvalidTargets(f"classification targets must be 0/1 or -1/+1, got {sorted(vals)}")


def elbo_stochastic(
    state: SparseGPState,
    x_batch: ArrayLike,
    y_batch: ArrayLike,
    lik: Likelihood,
    n_total: int,
) -> float:
    """Minibatch evidence lower bound, scaled to the full dataset."""
    _require_real(state.kernel, "elbo_stochastic")
    _require_integrable(state.kernel)
    x = np.atleast_2d(np.asarray(x_batch, dtype=np.float64))
    y = np.asarray(y_batch, dtype=np.float64).reshape(-1)
    if x.shape[0] == 0:
        raise ValueError("batch must be nonempty")
    if x.shape[0] != y.shape[0]:
        raise ValueError("batch inputs and targets disagree in length")
    scale = float(n_total) / x.shape[0]
    vals = hmk_to_vals(state.kernel)
    freqs = _freq_arrays(state.inducing)
    m_c = jnp.asarray(state.var_mean_stacked)
    s_c = jnp.asarray(state.var_cov)
    if isinstance(lik, GaussianLikelihood):
        out = _elbo_core_gaussian(
            vals, freqs, state.kernel.real_valued, m_c, s_c,
            jnp.asarray(x), jnp.asarray(y), lik.noise_var, scale, TRAIN_JITTER_REL,
        )
    else:
        y01 = _normalize_targets(y)
        out = _elbo_core_probit(
            vals, freqs, state.kernel.real_valued, m_c, s_c,
            jnp.asarray(x), jnp.asarray(y01), scale, TRAIN_JITTER_REL,
            jnp.asarray(_GH_T), jnp.asarray(_GH_W),
        )
    return float(out)


def kl_to_prior(state: SparseGPState) -> float:
    """KL[q(u) || p(u)] on the stacked real representation."""
    vals = hmk_to_vals(state.kernel)
    freqs = _freq_arrays(state.inducing)
    e = _kuu_embedded(vals, freqs, state.kernel.real_valued)
    return float(
        _kl_core(jnp.asarray(state.var_mean_stacked), jnp.asarray(state.var_cov), e, TRAIN_JITTER_REL)
    )


def collapsed_bound(
    kernel: HMKParams,
    z: InducingFrequencies,
    x: ArrayLike,
    y: ArrayLike,
    noise_var: float,
) -> float:
    """Gaussian-likelihood bound with the optimal q(u) eliminated."""
    _require_real(kernel, "collapsed_bound")
    _require_integrable(kernel)
    _check_match(kernel, z)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    out = _collapsed_core(
        hmk_to_vals(kernel), _freq_arrays(z), kernel.real_valued,
        jnp.asarray(x), jnp.asarray(y), float(noise_var), TRAIN_JITTER_REL,
    )
    return float(out)


def collapsed_fit(
    kernel: HMKParams,
    z: InducingFrequencies,
    x: ArrayLike,
    y: ArrayLike,
    noise_var: float,
) -> SparseGPState:
    """The optimal variational state of the collapsed regression problem."""
    _require_real(kernel, "collapsed_fit")
    _require_integrable(kernel)
    _check_match(kernel, z)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    vals = hmk_to_vals(kernel)
    freqs = _freq_arrays(z)
    e = np.asarray(_kuu_embedded(vals, freqs, kernel.real_valued))
    f = np.asarray(_kfu_embedded(vals, jnp.asarray(x), freqs, kernel.real_valued))
    rel = _probe_jitter(e)
    e_j = e + rel * (np.trace(e) / e.shape[0]) * np.eye(e.shape[0])
    mid = e_j + (f.T @ f) / noise_var
    mid_factor = linalg.cholesky_ladder(HermitianMatrix(mid.astype(np.complex128)))
    s_opt = np.real(e_j @ mid_factor.solve(e_j.astype(np.complex128)))
    m_opt = np.real(e_j @ mid_factor.solve((f.T @ y).astype(np.complex128)))
    m_opt = m_opt / noise_var
    m = z.total
    mean = m_opt[:m] + 1j * m_opt[m:]
    return SparseGPState(kernel, z, mean, 0.5 * (s_opt + s_opt.T), float(noise_var))


def predict(state: SparseGPState, x_test: ArrayLike, lik: Likelihood):
    """Predictive distribution at test points.

    Gaussian likelihood: returns (mean, variance) with observation noise
    included.  Bernoulli probit: returns class-1 probabilities
    Phi(mean / sqrt(1 + variance)).
    """
    mean, var = conditional(x_test, state)
    if isinstance(lik, GaussianLikelihood):
        return mean, var + lik.noise_var
    from scipy.special import ndtr

    return ndtr(mean / np.sqrt(1.0 + var))


# ---------------------------------------------------------------------------
# checkpoint serialization
# ---------------------------------------------------------------------------


def _lik_to_json(lik: Likelihood) -> dict:
    if isinstance(lik, GaussianLikelihood):
        return {"kind": "gaussian", "noise_var": lik.noise_var}
    return {"kind": "bernoulli_probit"}


def _lik_from_json(d: dict) -> Likelihood:
    if d["kind"] == "gaussian":
        return GaussianLikelihood(d["noise_var"])
    if d["kind"] == "bernoulli_probit":
        return BernoulliProbit()
    raise ValueError(f"unknown likelihood kind {d['kind']!r}")


def state_to_json(state: SparseGPState, lik: Likelihood | None = None) -> dict:
    comps = []
    for c in state.kernel.components:
        comps.append(
            {
                "center": c.center.tolist(),
                "gamma": c.gamma.tolist(),
                "sigma1_diag": c.lsg.sigma1_diag.tolist(),
                "lambda2": c.lsg.lambda2,
                "mu": c.mu.tolist(),
                "b_chol_re": c.b_chol.real.tolist(),
                "b_chol_im": c.b_chol.imag.tolist(),
            }
        )
    doc = {
        "format": "harmix-checkpoint-v1",
        "ordering": STACKING_NOTE,
        "kernel": {"real_valued": state.kernel.real_valued, "components": comps},
        "inducing": [f.tolist() for f in state.inducing.freqs],
        "variational": {
            "mean_re": state.var_mean.real.tolist(),
            "mean_im": state.var_mean.imag.tolist(),
            "cov_stacked": state.var_cov.tolist(),
        },
    }
    if state.noise_var is not None:
        doc["noise_var"] = state.noise_var
    if lik is not None:
        doc["likelihood"] = _lik_to_json(lik)
    return doc


def state_from_json(doc: dict) -> tuple[SparseGPState, Likelihood | None]:
    from .kernels import HMKComponent, LSGParams

    if doc.get("format") != "harmix-checkpoint-v1":
        raise ValueError("unrecognized checkpoint format")
    comps = []
    for c in doc["kernel"]["components"]:
        comps.append(
            HMKComponent(
                center=np.array(c["center"]),
                gamma=np.array(c["gamma"]),
                mu=np.array(c["mu"]),
                b_chol=np.array(c["b_chol_re"]) + 1j * np.array(c["b_chol_im"]),
                lsg=LSGParams(np.array(c["sigma1_diag"]), c["lambda2"]),
            )
        )
    kernel = HMKParams(tuple(comps), real_valued=doc["kernel"]["real_valued"])
    inducing = InducingFrequencies(tuple(np.array(f) for f in doc["inducing"]))
    var = doc["variational"]
    mean = np.array(var["mean_re"]) + 1j * np.array(var["mean_im"])
    state = SparseGPState(
        kernel, inducing, mean, np.array(var["cov_stacked"]), doc.get("noise_var")
    )
    lik = _lik_from_json(doc["likelihood"]) if "likelihood" in doc else None
    return state, lik


def save_checkpoint(path, state: SparseGPState, lik: Likelihood | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(state_to_json(state, lik), fh, indent=1)
        fh.write("\n")


def load_checkpoint(path) -> tuple[SparseGPState, Likelihood | None]:
    with open(path, "r", encoding="utf-8") as fh:
        return state_from_json(json.load(fh))
