"""Lattice walk primitives.

Continuous-time random walks on Z^d with jump rate 1 and a symmetric
finite-range jump kernel: transition probabilities, the Green's function
(total expected time at the origin), its Laplace transform in time, and
Poisson jump paths used as quenched disorder.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy import special


class DivergentError(ValueError):
    """The requested quantity is infinite in this dimension."""


# ---------------------------------------------------------------------------
# scaled Bessel evaluation
#
# For the simple walk each coordinate is a rate-1/d one-dimensional walk and
# P(X_t = x) factorizes into exp(-t/d) I_{x_i}(t/d) terms.  scipy's ive
# returns NaN for arguments beyond ~1e10, so a scaled asymptotic series takes
# over above the cut (relative agreement ~1e-16 at the switchover).

_IVE_CUT = 1.0e8


def scaled_bessel_i(order: int, z: np.ndarray | float) -> np.ndarray:
    """exp(-z) I_order(z) for z >= 0, stable for arbitrarily large z."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < _IVE_CUT
    out[small] = special.ive(order, z[small])
    zl = z[~small]
    if zl.size:
        mu = 4.0 * order * order
        c1 = -(mu - 1.0) / 8.0
        c2 = (mu - 1.0) * (mu - 9.0) / 128.0
        c3 = -(mu - 1.0) * (mu - 9.0) * (mu - 25.0) / 3072.0
        out[~small] = (1.0 + c1 / zl + c2 / zl**2 + c3 / zl**3) / np.sqrt(
            2.0 * np.pi * zl
        )
    return out


# ---------------------------------------------------------------------------
# jump kernels


@dataclass(frozen=True)
class JumpKernel:
    """Symmetric finite-support jump distribution on Z^d.

    points[i] is a displacement, probs[i] its weight.  The kernel must be
    symmetric under x -> -x, put no mass at the origin, and sum to 1.
    ``simple`` marks the nearest-neighbour kernel, which unlocks the
    factorized Bessel evaluation of transition probabilities.
    """

    dimension: int
    points: tuple[tuple[int, ...], ...]
    probs: tuple[float, ...]
    simple: bool = False

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if not self.points:
            raise ValueError("kernel needs at least one jump")
        if len(self.points) != len(self.probs):
            raise ValueError("points and probs length mismatch")
        table = {}
        for x, p in zip(self.points, self.probs):
            if len(x) != self.dimension:
                raise ValueError(f"displacement {x} has wrong dimension")
            if all(c == 0 for c in x):
                raise ValueError("kernel must not put mass at the origin")
            if p <= 0.0:
                raise ValueError("kernel weights must be positive")
            if x in table:
                raise ValueError(f"duplicate displacement {x}")
            table[x] = p
        for x, p in table.items():
            neg = tuple(-c for c in x)
            if neg not in table or abs(table[neg] - p) > 1e-12:
                raise ValueError(f"kernel is not symmetric at {x}")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError("kernel weights must sum to 1")
        if not _spans_lattice(self.points, self.dimension):
            raise ValueError("kernel support does not generate the full lattice")

    @staticmethod
    def simple_walk(dimension: int) -> "JumpKernel":
        """Nearest-neighbour walk: probability 1/(2d) to each unit step."""
        pts = []
        for axis in range(dimension):
            for sign in (1, -1):
                x = [0] * dimension
                x[axis] = sign
                pts.append(tuple(x))
        w = 1.0 / (2 * dimension)
        return JumpKernel(dimension, tuple(pts), tuple(w for _ in pts), simple=True)

    @staticmethod
    def from_weights(dimension: int, weights: dict[tuple[int, ...], float]) -> "JumpKernel":
        pts = tuple(sorted(weights))
        return JumpKernel(dimension, pts, tuple(weights[x] for x in pts))

    @cached_property
    def point_array(self) -> np.ndarray:
        return np.array(self.points, dtype=np.int64)

    @cached_property
    def prob_array(self) -> np.ndarray:
        return np.array(self.probs, dtype=float)

    @cached_property
    def reach(self) -> int:
        """Maximum coordinate displacement of a single jump (sup norm)."""
        return int(np.abs(self.point_array).max())

    def second_moment_matrix(self) -> np.ndarray:
        """Covariance of a single jump, sum_x p(x) x x^T."""
        pts = self.point_array.astype(float)
        return (pts[:, :, None] * pts[:, None, :] * self.prob_array[:, None, None]).sum(axis=0)

    def characteristic(self, theta: np.ndarray) -> np.ndarray:
        """sum_x p(x) cos(theta . x) for theta of shape (..., d)."""
        dots = np.tensordot(np.asarray(theta, dtype=float), self.point_array.T, axes=1)
        return np.cos(dots) @ self.prob_array


# ---------------------------------------------------------------------------
# transition probabilities


def transition_box(kernel: JumpKernel, t: float, radius: int) -> np.ndarray:
    """P(X_t = x) on the cube [-radius, radius]^d, origin at the center.

    Values are exact up to 1e-14 total truncation error.  Simple kernels
    factorize into per-coordinate scaled Bessel vectors; the general case
    sums the Poisson jump-count mixture of convolution powers on a box
    padded so no path counted by the truncated series can leave it.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    d = kernel.dimension
    shape = tuple(2 * radius + 1 for _ in range(d))
    if t == 0.0:
        out = np.zeros(shape)
        out[tuple(radius for _ in range(d))] = 1.0
        return out
    if kernel.simple:
        z = t / d
        axis = scaled_bessel_i(0, np.full(1, z))[0:1]
        orders = np.arange(1, radius + 1)
        upper = special.ive(orders, z) if z < _IVE_CUT else np.array(
            [float(scaled_bessel_i(k, np.array([z]))[0]) for k in orders]
        )
        line = np.concatenate([upper[::-1], axis, upper])
        out = line
        for _ in range(d - 1):
            out = np.multiply.outer(out, line)
        return out
    # uniformization: p_t = sum_n P(N_t = n) kernel^{*n}; the jump-count cap
    # leaves Poisson tail mass far below 1e-15 (Chernoff)
    n_cut = int(math.ceil(t + 12.0 * math.sqrt(t + 1.0) + 35.0))
    pad = kernel.reach * n_cut
    big = radius + pad
    if (2 * big + 1) ** d > 4e7:
        raise ValueError("transition box too large for the uniformization route")
    shape_big = tuple(2 * big + 1 for _ in range(d))
    out = np.zeros(shape_big)
    w = np.zeros(shape_big)
    w[tuple(big for _ in range(d))] = 1.0
    log_pmf = -t  # log P(N_t = 0)
    out += math.exp(log_pmf) * w
    for n in range(1, n_cut + 1):
        nxt = np.zeros(shape_big)
        for x, p in zip(kernel.point_array, kernel.prob_array):
            _shift_add(nxt, w, tuple(int(c) for c in x), p)
        w = nxt
        log_pmf += math.log(t) - math.log(n)
        out += math.exp(log_pmf) * w
    crop = tuple(slice(pad, pad + 2 * radius + 1) for _ in range(d))
    return out[crop]


def transition_probability(kernel: JumpKernel, t: float, x: tuple[int, ...]) -> float:
    """P(X_t = x) for the rate-1 walk started at the origin."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if len(x) != kernel.dimension:
        raise ValueError("point has wrong dimension")
    if t == 0.0:
        return 1.0 if all(c == 0 for c in x) else 0.0
    if kernel.simple:
        z = t / kernel.dimension
        val = 1.0
        for c in x:
            val *= float(scaled_bessel_i(abs(int(c)), np.array([z]))[0])
        return val
    radius = max(abs(int(c)) for c in x)
    # the box only needs to reach x; mass conservation is not required here
    box = transition_box(kernel, t, radius)
    idx = tuple(int(c) + radius for c in x)
    return float(box[idx])


def origin_return(kernel: JumpKernel, t: np.ndarray | float) -> np.ndarray:
    """P(X_t = 0), vectorized over t; the integrand of the Green's function."""
    t = np.asarray(t, dtype=float)
    d = kernel.dimension
    if kernel.simple:
        return scaled_bessel_i(0, t / d) ** d
    u, w = _fourier_rates(kernel)
    flat = np.atleast_1d(t).ravel()
    out = np.empty_like(flat)
    step = max(1, int(4e6 // max(len(u), 1)))
    for i in range(0, len(flat), step):
        out[i : i + step] = np.exp(-np.multiply.outer(flat[i : i + step], u)) @ w
    return out.reshape(t.shape)


def _shift_add(out: np.ndarray, v: np.ndarray, dx: tuple[int, ...], coef: float) -> None:
    """out += coef * (v shifted by dx), zero-padded at the faces."""
    src, dst = [], []
    for axis, s in enumerate(dx):
        n = v.shape[axis]
        if s == 0:
            src.append(slice(None))
            dst.append(slice(None))
        elif s > 0:
            src.append(slice(0, n - s))
            dst.append(slice(s, n))
        else:
            src.append(slice(-s, n))
            dst.append(slice(0, n + s))
    out[tuple(dst)] += coef * v[tuple(src)]


# ---------------------------------------------------------------------------
# quadrature helpers

@lru_cache(maxsize=8)
def _gl_rule(npts: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(npts)


def _panel_nodes(edges: np.ndarray, npts: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on consecutive panels given by edges."""
    gx, gw = _gl_rule(npts)
    a = np.asarray(edges[:-1], dtype=float)
    b = np.asarray(edges[1:], dtype=float)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    w = (half[:, None] * gw[None, :]).ravel()
    return x, w


@lru_cache(maxsize=32)
def _fourier_rates(kernel: JumpKernel, bump: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Decay rates 1 - characteristic(theta) on a Brillouin-zone grid.

    Tensor Gauss-Legendre nodes on [0, pi]^d, geometrically refined toward
    the theta = 0 corner where the rate vanishes quadratically.  Returns the
    flat rate vector and matching weights normalized so that constant 1
    integrates to 1.  Resolution backs off with dimension to keep the grid
    in memory; ``bump`` raises it for refinement-error estimates.
    """
    d = kernel.dimension
    depth = {1: 24, 2: 12, 3: 8}.get(d, 4) + bump
    npts = {1: 32, 2: 16, 3: 8}.get(d, 6) + 2 * bump
    edges = np.concatenate([[0.0], np.pi * 2.0 ** np.arange(-depth, 1, dtype=float)])
    x, w = _panel_nodes(edges, npts)
    grids = np.meshgrid(*([x] * d), indexing="ij")
    theta = np.stack([g.ravel() for g in grids], axis=-1)
    weight = np.ones(theta.shape[0])
    for k in range(d):
        weight *= np.broadcast_to(
            w.reshape([-1 if i == k else 1 for i in range(d)]), [len(x)] * d
        ).ravel()
    rates = 1.0 - kernel.characteristic(theta)
    return rates, weight / math.pi**d


# ---------------------------------------------------------------------------
# Green's function and its Laplace transform


@dataclass(frozen=True)
class GreenResult:
    """Green's function value with a reported quadrature error bound."""

    value: float
    error_bound: float
    dimension: int


@dataclass(frozen=True)
class LaplaceValue:
    """Laplace transform of P(X_t = 0) at b, with d/db."""

    value: float
    derivative: float


_TAIL_SPLIT = 64.0  # time beyond which the algebraic-tail substitution applies


def _laplace_quad(kernel: JumpKernel, b: float, refine: int = 1) -> tuple[float, float]:
    """integral of exp(-b t) P(X_t = 0) dt over [0, inf) and its b-derivative.

    Simple kernels integrate in time: plain panels on [0,1]; t = exp(v) on
    [1, min(1/b, T)]; for b > 0 the far tail uses u = b t (exponential
    weight), for b = 0 the algebraic substitution t = T y^{-2/(d-2)} maps
    the tail to a finite interval.  All regions are analytic, so the panel
    rule converges fast.  General kernels integrate the transform itself
    over the Brillouin zone: 1/(b + 1 - characteristic).
    """
    d = kernel.dimension
    if b < 0:
        raise ValueError("b must be nonnegative")
    if b == 0.0 and d <= 2:
        raise DivergentError("the walk is recurrent for d <= 2: integral diverges")
    if not kernel.simple:
        rates, w = _fourier_rates(kernel, bump=refine - 1)
        val = float(w @ (1.0 / (b + rates)))
        if b == 0.0 and d <= 4:
            der = -math.inf  # integral of t P(X_t = 0) diverges for d = 3, 4
        else:
            der = -float(w @ (1.0 / (b + rates) ** 2))
        return val, der
    val = 0.0
    der = 0.0
    t1, w1 = _panel_nodes(np.concatenate([[0.0], np.geomspace(1e-4, 1.0, 8 * refine)]))
    f1 = np.exp(-b * t1) * origin_return(kernel, t1)
    val += float(f1 @ w1)
    der -= float((t1 * f1) @ w1)
    t_hi = 1.0 / b if b > 0.0 else _TAIL_SPLIT
    vmax = math.log(max(t_hi, 1.0))
    if vmax > 0:
        panels = max(6, int(math.ceil(vmax))) * refine
        v2, w2 = _panel_nodes(np.linspace(0.0, vmax, panels + 1))
        t2 = np.exp(v2)
        f2 = t2 * np.exp(-b * t2) * origin_return(kernel, t2)
        val += float(f2 @ w2)
        der -= float((t2 * f2) @ w2)
    if b > 0.0:
        u0 = max(1.0, b)
        r3, w3 = _panel_nodes(np.concatenate([[0.0], np.geomspace(1e-12, 1.0, 14 * refine)]))
        u3 = u0 - np.log(r3)
        t3 = u3 / b
        f3 = np.exp(-u3) * origin_return(kernel, t3) / (b * r3)
        val += float(f3 @ w3)
        der -= float((t3 * f3) @ w3)
    else:
        # d >= 3 tail: exact change of variables, integrand -> const at y = 0
        a = 2.0 / (d - 2)
        T = max(_TAIL_SPLIT, 1.0)
        y3, w3 = _panel_nodes(np.concatenate([[0.0], np.geomspace(1e-8, 1.0, 10 * refine)]))
        t3 = T * y3**-a
        f3 = origin_return(kernel, t3) * T * a * y3 ** (-a - 1.0)
        val += float(f3 @ w3)
        if d >= 5:
            der -= float((t3 * f3) @ w3)
        else:
            der = -math.inf  # integral of t P(X_t = 0) diverges for d = 3, 4
    return val, der


def laplace_p0(kernel: JumpKernel, b: float) -> LaplaceValue:
    """Laplace transform of the return probability, with derivative.

    b = 0 is allowed for d >= 3 (the value is the Green's function; the
    derivative is -inf for d in {3, 4} where the first moment diverges).
    Raises DivergentError at b = 0 for d <= 2.
    """
    val, der = _laplace_quad(kernel, b)
    return LaplaceValue(val, der)


def green_function(kernel: JumpKernel, tolerance: float = 1e-9) -> GreenResult:
    """Total expected time at the origin, int_0^inf P(X_t = 0) dt, d >= 3.

    The error bound is a refinement estimate: the scheme is evaluated at two
    panel resolutions and the difference (plus a floor near machine epsilon)
    is reported.  Raises DivergentError for d <= 2.
    """
    if kernel.dimension <= 2:
        raise DivergentError("Green's function diverges for d <= 2")
    coarse, _ = _laplace_quad(kernel, 0.0, refine=1)
    fine, _ = _laplace_quad(kernel, 0.0, refine=2)
    err = abs(fine - coarse) + 1e-13 * abs(fine)
    if err > tolerance:
        raise ValueError(
            f"quadrature refinement stalled at error {err:.3e} > tolerance {tolerance:.3e}"
        )
    return GreenResult(value=fine, error_bound=err, dimension=kernel.dimension)


def green_function_watson(kernel: JumpKernel) -> float:
    """Green's function by the momentum-space route, independent of the
    time-domain quadrature.

    The expected number of origin visits of the embedded chain equals the
    Brillouin-zone integral of 1/(1 - characteristic); for the simple walk
    two coordinates reduce in closed form to a complete elliptic integral,
    leaving a (d-2)-fold integral with one logarithmic corner.  Supports the
    simple kernel in d in {3, 4, 5}.
    """
    d = kernel.dimension
    if not kernel.simple or d not in (3, 4, 5):
        raise ValueError("momentum-space route implemented for simple walks, d in {3,4,5}")

    def elliptic_pair(e: np.ndarray) -> np.ndarray:
        # (2pi)^-2 int dtheta1 dtheta2 / (2 + e - cos - cos) for excess e > 0,
        # through the complementary parameter: stable as e -> 0 where the
        # direct modulus 4/a^2 would round to 1
        return 2.0 / (np.pi * (2.0 + e)) * special.ellipkm1(e * (e + 4.0) / (e + 2.0) ** 2)

    m = d - 2
    # the integrand has a log singularity at the zone corner; the innermost
    # panel must be narrow enough that its share is resolved to 1e-11
    depth, npts = {1: (34, 32), 2: (12, 16), 3: (8, 16)}[m]
    edges = np.concatenate([[0.0], np.pi * 2.0 ** np.arange(-depth, 1, dtype=float)])
    x, w = _panel_nodes(edges, npts)
    sx = 2.0 * np.sin(0.5 * x) ** 2  # 1 - cos(x) without cancellation
    if m == 1:
        total = float(elliptic_pair(sx) @ w)
    elif m == 2:
        e = sx[:, None] + sx[None, :]
        total = float(np.einsum("i,j,ij->", w, w, elliptic_pair(e)))
    else:
        e = sx[:, None, None] + sx[None, :, None] + sx[None, None, :]
        total = float(np.einsum("i,j,k,ijk->", w, w, w, elliptic_pair(e)))
    return d * total / math.pi**m


def hitting_probability(kernel: JumpKernel, x: tuple[int, ...]) -> float:
    """Probability the walk ever visits the origin from x, d >= 3.

    Equals G(x)/G(0) with G(x) = int P(X_t = x) dt, by the last-exit
    decomposition.  Used to bound the bias of capped excursion sampling.
    """
    if kernel.dimension <= 2:
        return 1.0
    if all(c == 0 for c in x):
        return 1.0
    if not kernel.simple:
        raise ValueError("off-origin Green quadrature implemented for simple kernels")
    d = kernel.dimension
    z = np.abs(np.asarray(x, dtype=np.int64))

    def p_here(t: np.ndarray) -> np.ndarray:
        out = np.ones_like(np.asarray(t, dtype=float))
        for c in z:
            out = out * scaled_bessel_i(int(c), np.asarray(t, dtype=float) / d)
        return out

    r = float(np.linalg.norm(z))
    # integrand peaks near t ~ |x|; split there, then algebraic tail
    T = max(_TAIL_SPLIT, 4.0 * r * r)
    t1, w1 = _panel_nodes(np.concatenate([[0.0], np.geomspace(max(r, 1e-2) * 1e-3, T, 24)]))
    val = float((p_here(t1)) @ w1)
    a = 2.0 / (d - 2)
    y3, w3 = _panel_nodes(np.concatenate([[0.0], np.geomspace(1e-8, 1.0, 10)]))
    t3 = T * y3**-a
    val += float((p_here(t3) * T * a * y3 ** (-a - 1.0)) @ w3)
    return val / green_function(kernel).value


# ---------------------------------------------------------------------------
# disorder paths


def split_rng(seed: int, *index: int) -> np.random.Generator:
    """Counter-based generator for (run seed, task index...) addressing.

    Philox keyed through SeedSequence spawn keys: distinct index tuples give
    statistically independent streams, reproducibly across platforms.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(i) for i in index))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class DisorderPath:
    """One realization of the defect walk: jump times and displacements.

    times is sorted, strictly inside [0, horizon]; displacements has one row
    per jump.  The path is right-continuous: position(s) includes any jump
    at exactly s.
    """

    dimension: int
    rho: float
    horizon: float
    times: np.ndarray
    displacements: np.ndarray
    seed: int | None = None

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        dx = np.asarray(self.displacements, dtype=np.int64).reshape(len(t), self.dimension)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "displacements", dx)
        if len(t) and (t.min() < 0 or t.max() > self.horizon):
            raise ValueError("jump times outside [0, horizon]")
        if np.any(np.diff(t) < 0):
            raise ValueError("jump times must be sorted")

    @property
    def jump_count(self) -> int:
        return len(self.times)

    def position(self, s: float) -> np.ndarray:
        """Value at time s (sum of displacements with time <= s)."""
        k = int(np.searchsorted(self.times, s, side="right"))
        return self.displacements[:k].sum(axis=0)

    def restricted(self, t1: float, t2: float) -> "DisorderPath":
        """The path increment over (t1, t2], shifted to start at time 0.

        A jump exactly at t1 belongs to the left endpoint's base value and is
        excluded; a jump exactly at t2 is included.  Matches the solver's
        jump-before-readoff endpoint convention, so interval partition
        functions concatenate consistently.
        """
        if not (0.0 <= t1 <= t2 <= self.horizon):
            raise ValueError("need 0 <= t1 <= t2 <= horizon")
        i = int(np.searchsorted(self.times, t1, side="right"))
        j = int(np.searchsorted(self.times, t2, side="right"))
        return DisorderPath(
            self.dimension,
            self.rho,
            t2 - t1,
            self.times[i:j] - t1,
            self.displacements[i:j],
            seed=None,
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "d": self.dimension,
                "rho": self.rho,
                "t": self.horizon,
                "seed": self.seed,
                "jumps": [
                    {"time": float(tj), "dx": [int(c) for c in dx]}
                    for tj, dx in zip(self.times, self.displacements)
                ],
            }
        )

    @staticmethod
    def from_json(text: str) -> "DisorderPath":
        obj = json.loads(text)
        jumps = obj.get("jumps", [])
        times = np.array([j["time"] for j in jumps], dtype=float)
        disp = np.array([j["dx"] for j in jumps], dtype=np.int64).reshape(len(jumps), obj["d"])
        return DisorderPath(obj["d"], obj["rho"], obj["t"], times, disp, seed=obj.get("seed"))


def sample_disorder(
    kernel: JumpKernel, rho: float, t: float, seed: int | np.random.Generator
) -> DisorderPath:
    """Draw the defect walk's jumps on [0, t]: a rate-rho Poisson process
    with i.i.d. kernel displacements."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    if t < 0:
        raise ValueError("t must be nonnegative")
    rng = seed if isinstance(seed, np.random.Generator) else split_rng(seed)
    seed_val = None if isinstance(seed, np.random.Generator) else int(seed)
    k = int(rng.poisson(rho * t)) if rho > 0 and t > 0 else 0
    times = np.sort(rng.uniform(0.0, t, size=k))
    idx = rng.choice(len(kernel.points), size=k, p=kernel.prob_array)
    disp = kernel.point_array[idx].reshape(k, kernel.dimension)
    return DisorderPath(kernel.dimension, rho, t, times, disp, seed=seed_val)


def disorder_likelihood_ratio(path: DisorderPath, rho: float, rho_new: float) -> float:
    """Radon-Nikodym weight of jump rate rho against rho_new on [0, horizon].

    Depends on the path only through its jump count k:
    exp(horizon (rho_new - rho)) * (rho / rho_new)^k.  Reweighting samples
    drawn at rho_new by this factor reproduces rho expectations; its second
    moment under rho_new is exp(horizon (rho_new - rho)^2 / rho_new).
    """
    if rho_new <= 0:
        raise ValueError("rho_new must be positive")
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    k = path.jump_count
    base = math.exp(path.horizon * (rho_new - rho))
    if k == 0:
        return base
    return base * (rho / rho_new) ** k
