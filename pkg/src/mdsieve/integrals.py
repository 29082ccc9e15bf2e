"""Numerical values of the functionals I_k and J_k.

For F = psi(sum t) prod g(t_i) with g(t) = psi(t/U)/(1 + T t):

    I_k(F) = int psi(s)^2 (g^2)^{*k}(s) ds
    J_k(F) = int Phi(s)^2 (g^2)^{*(k-1)}(s) ds,  Phi(s) = int psi(s + t) g(t) dt

which is what the convolution method evaluates.  F1 and F2 factor into
one-dimensional integrals.  Quadrature (k <= 3) and Monte-Carlo are
independent cross-checks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.stats import qmc

from .errors import DomainError, ResourceError

MAX_K = 12
QUADRATURE_MAX_K = 3
DEFAULT_GRID_STEP = 2.0**-11
DEFAULT_MC_SAMPLES = 10**7
DEFAULT_SEED = 20240601
MC_CHUNK = 10**6
METHODS = ("convolution", "quadrature", "monte-carlo")


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def _psi(t):
    return _smoothstep((1.0 - np.asarray(t, dtype=np.float64)) / 0.1)


@dataclass(frozen=True)
class Profile:
    """The one-dimensional factors for a given k."""

    k: int

    @property
    def T(self) -> float:
        return self.k * math.log(self.k)

    @property
    def U(self) -> float:
        return self.k**-0.5

    def g(self, t):
        t = np.asarray(t, dtype=np.float64)
        return _psi(t / self.U) / (1.0 + self.T * t)

    def h(self, t):
        t = np.asarray(t, dtype=np.float64)
        return _psi(t / 2.0) / (1.0 + self.T * t)


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    method: str
    error_estimate: float
    grid_step: float | None = None
    sample_count: int | None = None
    seed: int | None = None
    which: str = "I"
    variant: str = "F"
    k: int = 0
    notes: tuple[str, ...] = field(default=())


def _quad(f, a, b, points=()):
    pts = sorted(p for p in set(points) if a < p < b)
    val, err = integrate.quad(f, a, b, points=pts or None, limit=400, epsabs=0.0, epsrel=1e-13)
    return val, err


def one_dim_constants(k: int) -> dict[str, tuple[float, float]]:
    """(value, error) of G2 = int g^2, c_g = int g, H2 = int h^2,
    HG = int h g, c_h = int h, by adaptive quadrature split at the knots."""
    pr = Profile(k)
    U = pr.U
    kg = (0.9 * U, U)
    kh = (1.8, 2.0)
    return {
        "G2": _quad(lambda t: float(pr.g(t)) ** 2, 0.0, U, kg),
        "c_g": _quad(lambda t: float(pr.g(t)), 0.0, U, kg),
        "H2": _quad(lambda t: float(pr.h(t)) ** 2, 0.0, 2.0, kh),
        "HG": _quad(lambda t: float(pr.h(t) * pr.g(t)), 0.0, U, kg),
        "c_h": _quad(lambda t: float(pr.h(t)), 0.0, 2.0, kh),
    }


def _product_forms(k: int, which: str, variant: str) -> tuple[float, float]:
    c = {n: v for n, (v, _) in one_dim_constants(k).items()}
    G2, cg, H2, HG, ch = c["G2"], c["c_g"], c["H2"], c["HG"], c["c_h"]

    def pw(base, e):
        return base**e if e >= 0 else 0.0

    if variant == "F1":
        val = pw(G2, k) if which == "I" else pw(G2, k - 1) * cg * cg
    elif which == "I":
        val = k * H2 * pw(G2, k - 1) + k * (k - 1) * HG * HG * pw(G2, k - 2)
    else:
        # last coordinate integrated first; the relaxed factor sits either
        # among the first k-1 coordinates or on the last one
        inner = (k - 1) * H2 * pw(G2, k - 2) + (k - 1) * (k - 2) * HG * HG * pw(G2, k - 3)
        val = cg * cg * inner + 2.0 * cg * ch * (k - 1) * HG * pw(G2, k - 2) + ch * ch * pw(G2, k - 1)
    return val, abs(val) * 1e-12


# --- convolution ---------------------------------------------------------


def _trap_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


def _conv_power(f: np.ndarray, times: int, step: float) -> np.ndarray | None:
    """times-fold trapezoid self-convolution of samples f on [0, 1]."""
    if times == 0:
        return None
    out = f.copy()
    n = len(f)
    for _ in range(times - 1):
        full = np.convolve(f, out)[:n]
        # trapezoid: halve the two end products of each partial sum
        full -= 0.5 * (f[0] * out + f * out[0])
        out = full * step
    return out


def _convolution_raw(k: int, which: str, step: float) -> float:
    pr = Profile(k)
    n = int(round(1.0 / step)) + 1
    s = np.arange(n) * step
    f = pr.g(s) ** 2
    w = _trap_weights(n)
    if which == "I":
        hk = _conv_power(f, k, step)
        return float(step * np.sum(w * _psi(s) ** 2 * hk))
    # Phi on the grid: Phi(s_i) = int_0^1 psi(s_i + t) g(t) dt
    s2 = np.arange(2 * n - 1) * step
    psi2 = _psi(s2)
    gw = pr.g(s) * w
    phi = step * np.correlate(psi2, gw, mode="valid")[:n]
    if k == 1:
        return float(phi[0] ** 2)
    hk = _conv_power(f, k - 1, step)
    return float(step * np.sum(w * phi * phi * hk))


def _convolution(k: int, which: str, step: float) -> IntegralEstimate:
    fine = _convolution_raw(k, which, step)
    coarse = _convolution_raw(k, which, 2.0 * step)
    value = (4.0 * fine - coarse) / 3.0
    return IntegralEstimate(value, "convolution", abs(fine - coarse) / 3.0, grid_step=step, which=which, k=k)


# --- quadrature ----------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def _gauss_pieces(f, breaks) -> float:
    total = 0.0
    for a, b in itertools.pairwise(breaks):
        if b <= a:
            continue
        x = 0.5 * (b - a) * _GL_NODES + 0.5 * (b + a)
        total += 0.5 * (b - a) * float(np.dot(_GL_WEIGHTS, f(x)))
    return total


def _kinks(pr: Profile, sigma: float) -> list[float]:
    """Candidate kink points in t for an integrand involving psi(sigma + t)
    with further coordinates still to be integrated."""
    U = pr.U
    c = [0.9, 1.0]
    shifts = [0.0, 0.9 * U, U, 1.8 * U, 1.9 * U, 2.0 * U]
    pts = {0.9 * U}
    for a in c:
        for sh in shifts:
            pts.add(a - sh - sigma)
    return [p for p in pts if 0.0 < p < U]


def _inner_I(pr: Profile, sigma: float) -> float:
    """int_0^U g(t)^2 psi(sigma + t)^2 dt by piecewise Gauss."""
    U = pr.U
    top = min(U, 1.0 - sigma)
    if top <= 0:
        return 0.0
    br = sorted({0.0, top, *[p for p in (0.9 * U, 0.9 - sigma) if 0.0 < p < top]})
    return _gauss_pieces(lambda t: pr.g(t) ** 2 * _psi(sigma + t) ** 2, br)


def _phi_at(pr: Profile, sigma: float) -> float:
    U = pr.U
    top = min(U, 1.0 - sigma)
    if top <= 0:
        return 0.0
    br = sorted({0.0, top, *[p for p in (0.9 * U, 0.9 - sigma) if 0.0 < p < top]})
    return _gauss_pieces(lambda t: pr.g(t) * _psi(sigma + t), br)


def _quadrature(k: int, which: str) -> IntegralEstimate:
    if k > QUADRATURE_MAX_K:
        raise ResourceError(f"quadrature supports k <= {QUADRATURE_MAX_K}")
    pr = Profile(k)
    U = pr.U

    def g2(t):
        return float(pr.g(t)) ** 2

    if which == "I":
        leaf = lambda sigma: _inner_I(pr, sigma)
        depth = k - 1
    else:
        leaf = lambda sigma: _phi_at(pr, sigma) ** 2
        depth = k - 1
    errs = []

    def level(sigma: float, remaining: int) -> float:
        if remaining == 0:
            return leaf(sigma)
        val, err = _quad(lambda t: g2(t) * level(sigma + t, remaining - 1), 0.0, min(U, 1.0 - sigma), _kinks(pr, sigma))
        errs.append(err)
        return val

    value = level(0.0, depth)
    err = errs[-1] if errs else abs(value) * 1e-13
    return IntegralEstimate(value, "quadrature", err, which=which, k=k)


# --- Monte-Carlo ---------------------------------------------------------


class _InverseCdf:
    def __init__(self, density, top: float, n: int = 1 << 16):
        t = np.linspace(0.0, top, n + 1)
        f = density(t)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(t))])
        self.total = cdf[-1]
        self.cdf = cdf / self.total
        self.t = t

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return np.interp(u, self.cdf, self.t)


def _monte_carlo(k: int, which: str, samples: int, seed: int) -> IntegralEstimate:
    pr = Profile(k)
    consts = one_dim_constants(k)
    G2, cg = consts["G2"][0], consts["c_g"][0]
    inv_g2 = _InverseCdf(lambda t: pr.g(t) ** 2, pr.U)
    inv_g = _InverseCdf(pr.g, pr.U)
    dims = k if which == "I" else k + 1
    sampler = qmc.LatinHypercube(d=dims, seed=np.random.default_rng(seed))
    sums, sq = [], []
    done = 0
    while done < samples:
        n = min(MC_CHUNK, samples - done)
        u = sampler.random(n)
        if which == "I":
            t = inv_g2(u)
            vals = _psi(t.sum(axis=1)) ** 2
        else:
            sigma = inv_g2(u[:, : k - 1]).sum(axis=1) if k > 1 else np.zeros(n)
            a = inv_g(u[:, k - 1])
            b = inv_g(u[:, k])
            vals = _psi(sigma + a) * _psi(sigma + b)
        sums.append(math.fsum(vals))
        sq.append(math.fsum(vals * vals))
        done += n
    mean = math.fsum(sums) / samples
    var = max(math.fsum(sq) / samples - mean * mean, 0.0)
    scale = G2**k if which == "I" else G2 ** (k - 1) * cg * cg
    return IntegralEstimate(
        scale * mean, "monte-carlo", scale * math.sqrt(var / samples), sample_count=samples, seed=seed, which=which, k=k
    )


def integral_IJ(
    k: int,
    which: str = "I",
    G: str = "F",
    method: str = "convolution",
    grid_step: float = DEFAULT_GRID_STEP,
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> IntegralEstimate:
    """I_k(G) or J_k(G) for G in {F, F1, F2}."""
    k = int(k)
    if k < 1:
        raise DomainError("k must be >= 1")
    if k > MAX_K:
        raise ResourceError(f"k={k} exceeds the cap {MAX_K}")
    if which not in ("I", "J"):
        raise DomainError(f"which must be 'I' or 'J', got {which!r}")
    if G not in ("F", "F1", "F2"):
        raise DomainError(f"unknown function {G!r}")
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}")
    if G != "F":
        val, err = _product_forms(k, which, G)
        return IntegralEstimate(val, "quadrature", err, which=which, variant=G, k=k, notes=("product of 1-D integrals",))
    if method == "convolution":
        est = _convolution(k, which, grid_step)
    elif method == "quadrature":
        est = _quadrature(k, which)
    else:
        est = _monte_carlo(k, which, int(samples), int(seed))
    return est
