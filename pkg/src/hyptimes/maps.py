"""One-dimensional maps with singular or neutral behaviour.

Each map is wrapped in a :class:`MapModel` carrying vectorised kernels for
the map itself, the absolute derivative, the log inverse-derivative norm
``log ||Df(x)^{-1}|| = -log |f'(x)|``, and distances to the exceptional set
S (the points where the map fails to be a C^2 local diffeomorphism).

All kernels are numpy based.  Scalar entry points route through the same
kernels on one-element arrays, so scalar and array code paths produce
bit-identical values; the test suite relies on this.

Built-in maps (see :func:`make_map` for the registry syntax):

``circle-intermittent``
    On the circle [-1, 1] with endpoints identified, ``f(x) = 2 sqrt(x) - 1``
    for x >= 0 and ``f(x) = 1 - 2 sqrt(|x|)`` otherwise.  The derivative is
    ``|x|^(-1/2)``; the identified endpoint is a neutral fixed point and the
    derivative blows up at 0, so S = {0, -1}.  Normalised Lebesgue measure
    is invariant: the two inverse branches satisfy
    ``1/f'(g1(x)) + 1/f'(g2(x)) = 1``.

``doubling``
    ``f(x) = 2x mod 1`` on [0, 1).  Uniformly expanding, S is empty.

``quadratic(a)``
    ``f(x) = 1 - a x^2`` on [-1, 1] for 0 < a <= 2.  The critical point
    makes S = {0}; the derivative vanishes there, so the inverse-derivative
    norm blows up.

``manneville(s)``
    ``f(x) = x + x^(1+s) mod 1`` on [0, 1) for s > 0.  Neutral fixed point
    at 0 but S is empty (the map stays a local diffeomorphism).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Array = np.ndarray


def _as_float(x: Array) -> Array:
    """Coerce to a floating array, preserving an already-floating dtype.

    Keeping wider dtypes intact lets the invariance probe iterate dyadic
    maps in extended precision; float64 inputs pass through untouched.
    """
    a = np.asarray(x)
    if not np.issubdtype(a.dtype, np.floating):
        a = a.astype(float)
    return a

__all__ = [
    "Array",
    "Branch",
    "HyperbolicParams",
    "MapModel",
    "NonDegeneracyParams",
    "NonDegeneracyReport",
    "check_nondegeneracy",
    "default_b",
    "make_map",
    "registered_map_names",
]


@dataclass(frozen=True)
class NonDegeneracyParams:
    """Constants (B, beta) of the power-law derivative / distortion bounds.

    B must exceed 1 and beta must be positive.  The three conditions they
    parameterise are, with d(x) = dist(x, S):

    s1:  (1/B) d(x)^beta <= |f'(x)| <= B d(x)^(-beta)
    s2:  |log||Df(x)^-1|| - log||Df(y)^-1||| <= (B / d(x)^beta) dist(x, y)
    s3:  |log|det Df(x)| - log|det Df(y)|| <= (B / d(x)^beta) dist(x, y)

    where the pair conditions apply to x, y with dist(x, y) < d(x)/2.
    In one dimension s2 and s3 coincide.
    """

    B: float
    beta: float

    def __post_init__(self) -> None:
        if not self.B > 1.0:
            raise ValueError(f"B must be > 1, got {self.B}")
        if not self.beta > 0.0:
            raise ValueError(f"beta must be > 0, got {self.beta}")


def default_b(beta: float) -> float:
    """Default exponent b for a map with Holder exponent beta.

    Half of the admissible upper bound min(1/2, 1/(4 beta)), so the
    strict inequality in :meth:`HyperbolicParams.validate_b_bound` holds
    with a factor-two margin.
    """
    return 0.5 * min(0.5, 1.0 / (4.0 * beta))


@dataclass(frozen=True)
class HyperbolicParams:
    """Detection parameters (sigma, delta, b).

    sigma in (0, 1) is the contraction rate, delta > 0 the distance
    truncation, and b > 0 the exponent of the distance requirement.
    The constraint b < min(1/2, 1/(4 beta)) depends on the map's beta and
    is checked separately by :meth:`validate_b_bound`.
    """

    sigma: float
    delta: float
    b: float

    def __post_init__(self) -> None:
        if not 0.0 < self.sigma < 1.0:
            raise ValueError(f"sigma must lie in (0, 1), got {self.sigma}")
        if not self.delta > 0.0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if not self.b > 0.0:
            raise ValueError(f"b must be > 0, got {self.b}")

    @property
    def log_sigma(self) -> float:
        return math.log(self.sigma)

    @property
    def abs_log_sigma(self) -> float:
        return abs(math.log(self.sigma))

    def validate_b_bound(self, beta: float) -> None:
        """Raise unless b < min(1/2, 1/(4 beta))."""
        bound = min(0.5, 1.0 / (4.0 * beta))
        if not self.b < bound:
            raise ValueError(
                f"b = {self.b} violates the constraint b < min(1/2, 1/(4 beta)) "
                f"= {bound} for beta = {beta}"
            )


@dataclass(frozen=True)
class Branch:
    """Inverse branch of a map.

    ``cell`` is the monotonicity interval of the forward map (in canonical
    coordinates) and ``pullback`` maps a point of the range back into it.
    """

    cell_lo: float
    cell_hi: float
    pullback: Callable[[Array], Array]

    def contains(self, x: Array) -> Array:
        return (x >= self.cell_lo) & (x < self.cell_hi)


@dataclass(frozen=True)
class MapModel:
    """A one-dimensional map together with its singular-set geometry.

    ``kind`` is "circle" (domain [lo, hi) with endpoints identified) or
    "interval" (domain [lo, hi]).  ``exceptional`` lists the canonical
    coordinates of S.  Kernels act elementwise on floating arrays; float64
    is the working dtype, wider dtypes pass through unconverted.
    """

    name: str
    kind: str
    lo: float
    hi: float
    exceptional: tuple[float, ...]
    _eval_kernel: Callable[[Array], Array]
    _abs_deriv_kernel: Callable[[Array], Array]
    branches: tuple[Branch, ...] = ()
    nondegen: NonDegeneracyParams = field(
        default_factory=lambda: NonDegeneracyParams(B=4.0, beta=0.5)
    )
    # mantissa bits consumed per iteration when the map is exactly a dyadic
    # shift in binary (so float orbits collapse onto a coarse grid); nonzero
    # makes the invariance probe carry extended-precision samples
    entropy_bits_per_step: int = 0

    @property
    def period(self) -> float:
        return self.hi - self.lo

    # -- coordinates ------------------------------------------------------

    def canonicalize_array(self, x: Array) -> Array:
        """Map coordinates to the canonical domain.

        Circle kind wraps into [lo, hi) (hi is identified with lo).
        Interval kind validates membership in [lo, hi].
        """
        x = _as_float(x)
        if self.kind == "circle":
            return self.lo + np.mod(x - self.lo, self.period)
        if np.any(x < self.lo) or np.any(x > self.hi):
            raise ValueError(f"point outside domain [{self.lo}, {self.hi}] of {self.name}")
        return x

    def canonicalize(self, x: float) -> float:
        return float(self.canonicalize_array(np.array([x], dtype=float))[0])

    def metric_dist_array(self, x: Array, y: Array) -> Array:
        """Distance in the map's own metric (arc length on circles)."""
        d = np.abs(_as_float(x) - _as_float(y))
        if self.kind == "circle":
            return np.minimum(d, self.period - d)
        return d

    def metric_dist(self, x: float, y: float) -> float:
        return float(
            self.metric_dist_array(np.array([x], dtype=float), np.array([y], dtype=float))[0]
        )

    # -- kernels ----------------------------------------------------------

    def eval_array(self, x: Array) -> Array:
        """One step of the map on canonical coordinates."""
        return self._eval_kernel(_as_float(x))

    def eval(self, x: float) -> float:
        return float(self.eval_array(np.array([x], dtype=float))[0])

    def abs_deriv_array(self, x: Array) -> Array:
        """|f'(x)| elementwise; meaningful off the exceptional set."""
        return self._abs_deriv_kernel(_as_float(x))

    def abs_deriv(self, x: float) -> float:
        return float(self.abs_deriv_array(np.array([x], dtype=float))[0])

    def is_exceptional_array(self, x: Array) -> Array:
        """Exact membership in S (canonical coordinate equality)."""
        x = _as_float(x)
        out = np.zeros(x.shape, dtype=bool)
        for s in self.exceptional:
            out |= x == s
        return out

    def log_inv_deriv_array(self, x: Array) -> Array:
        """log ||Df(x)^{-1}|| = -log |f'(x)|, with +inf flagging exact S hits.

        The flag applies on all of S, including points where the limit of
        the formula would be finite or -inf; orbit generation censors the
        trace at such hits, so the flag never enters downstream sums.
        """
        x = _as_float(x)
        mask = self.is_exceptional_array(x)
        safe = np.where(mask, 1.0, x)
        val = -np.log(self._abs_deriv_kernel(safe))
        return np.where(mask, np.inf, val)

    def log_inv_deriv(self, x: float) -> float:
        return float(self.log_inv_deriv_array(np.array([x], dtype=float))[0])

    def dist_to_S_array(self, x: Array) -> Array:
        """Metric distance to the exceptional set; +inf when S is empty."""
        x = _as_float(x)
        if not self.exceptional:
            return np.full(x.shape, np.inf)
        d = np.full(x.shape, np.inf)
        for s in self.exceptional:
            d = np.minimum(d, self.metric_dist_array(x, np.full(x.shape, s)))
        return d

    def dist_to_S(self, x: float) -> float:
        return float(self.dist_to_S_array(np.array([x], dtype=float))[0])

    def dist_delta_array(self, x: Array, delta: float) -> Array:
        """Truncated distance: dist if dist <= delta, else exactly 1."""
        d = self.dist_to_S_array(x)
        return np.where(d <= delta, d, 1.0)

    def dist_delta(self, x: float, delta: float) -> float:
        return float(self.dist_delta_array(np.array([x], dtype=float), delta)[0])

    def neglog_dist_delta_array(self, x: Array, delta: float) -> Array:
        """-log dist_delta(x, S); 0 where the truncation applies, +inf on S."""
        d = self.dist_delta_array(x, delta)
        mask = d == 0.0
        safe = np.where(mask, 1.0, d)
        val = -np.log(safe) + 0.0  # the +0.0 normalises -0.0 at d == 1
        return np.where(mask, np.inf, val)

    def neglog_dist_delta(self, x: float, delta: float) -> float:
        return float(self.neglog_dist_delta_array(np.array([x], dtype=float), delta)[0])

    def sample_uniform(self, rng: np.random.Generator, size: int | None = None) -> Array:
        """Sample from normalised Lebesgue measure on the canonical domain.

        With size None returns a single float (one draw from the stream).
        """
        if size is None:
            return float(rng.uniform(self.lo, self.hi))
        return rng.uniform(self.lo, self.hi, size)

    def default_params(
        self, sigma: float | None = None, delta: float | None = None, b: float | None = None
    ) -> HyperbolicParams:
        """Detection parameters with per-map defaults filled in.

        sigma defaults to exp(-1/4), delta to 0.1, and b to
        ``default_b(beta)`` for this map's beta.
        """
        params = HyperbolicParams(
            sigma=math.exp(-0.25) if sigma is None else sigma,
            delta=0.1 if delta is None else delta,
            b=default_b(self.nondegen.beta) if b is None else b,
        )
        params.validate_b_bound(self.nondegen.beta)
        return params


# ---------------------------------------------------------------------------
# built-in maps


def _circle_intermittent() -> MapModel:
    def ev(x: Array) -> Array:
        s = np.sqrt(np.abs(x))
        y = np.where(x >= 0.0, 2.0 * s - 1.0, 1.0 - 2.0 * s)
        # float rounding can land on the identified endpoint; wrap it
        return np.where(y == 1.0, -1.0, y)

    def dv(x: Array) -> Array:
        return 1.0 / np.sqrt(np.abs(x))

    def g1(y: Array) -> Array:
        return ((1.0 + y) / 2.0) ** 2

    def g2(y: Array) -> Array:
        return -(((1.0 - y) / 2.0) ** 2)

    return MapModel(
        name="circle-intermittent",
        kind="circle",
        lo=-1.0,
        hi=1.0,
        exceptional=(-1.0, 0.0),
        _eval_kernel=ev,
        _abs_deriv_kernel=dv,
        branches=(
            Branch(cell_lo=0.0, cell_hi=1.0, pullback=g1),
            Branch(cell_lo=-1.0, cell_hi=0.0, pullback=g2),
        ),
        nondegen=NonDegeneracyParams(B=4.0, beta=0.5),
    )


def _doubling() -> MapModel:
    log_half = math.log(0.5)

    def ev(x: Array) -> Array:
        return np.mod(2.0 * x, 1.0)

    def dv(x: Array) -> Array:
        return np.full(np.asarray(x).shape, 2.0)

    # expressed via log(0.5) so that L_j - log(sigma) vanishes exactly
    # when sigma = 0.5
    def g_lo(y: Array) -> Array:
        return y / 2.0

    def g_hi(y: Array) -> Array:
        return (y + 1.0) / 2.0

    m = MapModel(
        name="doubling",
        kind="circle",
        lo=0.0,
        hi=1.0,
        exceptional=(),
        _eval_kernel=ev,
        _abs_deriv_kernel=dv,
        branches=(
            Branch(cell_lo=0.0, cell_hi=0.5, pullback=g_lo),
            Branch(cell_lo=0.5, cell_hi=1.0, pullback=g_hi),
        ),
        nondegen=NonDegeneracyParams(B=2.0, beta=0.5),
        entropy_bits_per_step=1,
    )
    # sanity: the constant must match the kernel
    assert m.log_inv_deriv(0.3) == log_half
    return m


def _quadratic(a: float) -> MapModel:
    if not 0.0 < a <= 2.0:
        raise ValueError(f"quadratic parameter a must lie in (0, 2], got {a}")

    def ev(x: Array) -> Array:
        return 1.0 - a * x * x

    def dv(x: Array) -> Array:
        return 2.0 * a * np.abs(x)

    def g_pos(y: Array) -> Array:
        return np.sqrt(np.maximum(1.0 - y, 0.0) / a)

    def g_neg(y: Array) -> Array:
        return -np.sqrt(np.maximum(1.0 - y, 0.0) / a)

    return MapModel(
        name=f"quadratic({a:g})",
        kind="interval",
        lo=-1.0,
        hi=1.0,
        exceptional=(0.0,),
        _eval_kernel=ev,
        _abs_deriv_kernel=dv,
        branches=(
            Branch(cell_lo=0.0, cell_hi=1.0, pullback=g_pos),
            Branch(cell_lo=-1.0, cell_hi=0.0, pullback=g_neg),
        ),
        nondegen=NonDegeneracyParams(B=4.0, beta=1.0),
    )


def _manneville(s: float) -> MapModel:
    if not s > 0.0:
        raise ValueError(f"manneville parameter s must be > 0, got {s}")

    def ev(x: Array) -> Array:
        return np.mod(x + x ** (1.0 + s), 1.0)

    def dv(x: Array) -> Array:
        return 1.0 + (1.0 + s) * x**s

    return MapModel(
        name=f"manneville({s:g})",
        kind="circle",
        lo=0.0,
        hi=1.0,
        exceptional=(),
        _eval_kernel=ev,
        _abs_deriv_kernel=dv,
        branches=(),
        nondegen=NonDegeneracyParams(B=2.0, beta=0.5),
    )


_PARAM_RE = re.compile(r"^(quadratic|manneville)\(([^)]+)\)$")


def make_map(name: str) -> MapModel:
    """Build a registered map from its name.

    Plain names: "circle-intermittent", "doubling".  Parameterised names:
    "quadratic(a)" with 0 < a <= 2, "manneville(s)" with s > 0.
    """
    if name == "circle-intermittent":
        return _circle_intermittent()
    if name == "doubling":
        return _doubling()
    m = _PARAM_RE.match(name.replace(" ", ""))
    if m:
        try:
            value = float(m.group(2))
        except ValueError as exc:
            raise ValueError(f"bad numeric parameter in map name {name!r}") from exc
        return _quadratic(value) if m.group(1) == "quadratic" else _manneville(value)
    raise ValueError(
        f"unknown map {name!r}; expected one of {registered_map_names()}"
    )


def registered_map_names() -> tuple[str, ...]:
    return ("circle-intermittent", "doubling", "quadratic(a)", "manneville(s)")


# ---------------------------------------------------------------------------
# non-degeneracy probe


@dataclass
class NonDegeneracyReport:
    """Sampled margins for the conditions s1, s2, s3.

    ``vacuous`` is set when S is empty, in which case no sample is
    evaluated against the distance-based bounds.  Margins are
    "bound minus attained"; negative margins are failures.  In one
    dimension s2 and s3 coincide, so their rows carry the same numbers.
    """

    B: float
    beta: float
    sample_count: int
    vacuous: bool
    s1_failures: int = 0
    s2_failures: int = 0
    s3_failures: int = 0
    s1_worst_margin: float = math.inf
    s2_worst_margin: float = math.inf
    s3_worst_margin: float = math.inf

    @property
    def passed(self) -> bool:
        return self.s1_failures == 0 and self.s2_failures == 0 and self.s3_failures == 0


def check_nondegeneracy(
    map_model: MapModel,
    B: float,
    beta: float,
    sample_count: int = 1000,
    seed: int = 0,
) -> NonDegeneracyReport:
    """Probe the conditions s1, s2, s3 on random samples.

    This reports whether the supplied (B, beta) pair holds on the sample;
    it does not certify optimal constants.  Points of S are excluded from
    the sample.  For s2/s3 a partner y is drawn with
    dist(x, y) < dist(x, S)/2, as the pair conditions require.

    Parameters
    ----------
    map_model : MapModel
        Map under test.
    B, beta : float
        Candidate constants, validated as for NonDegeneracyParams.
    sample_count : int
        Number of base points x.
    seed : int
        Seed for the sampling generator.
    """
    NonDegeneracyParams(B=B, beta=beta)  # validate
    if not map_model.exceptional:
        return NonDegeneracyReport(B=B, beta=beta, sample_count=0, vacuous=True)

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    xs = map_model.sample_uniform(rng, sample_count)
    ok = ~map_model.is_exceptional_array(xs)
    xs = xs[ok]

    d = map_model.dist_to_S_array(xs)
    fp = map_model.abs_deriv_array(xs)

    # s1 margins in log scale: both inequalities as bound - attained
    log_fp = np.log(fp)
    upper = (math.log(B) - beta * np.log(d)) - log_fp
    lower = log_fp - (beta * np.log(d) - math.log(B))
    s1_margin = np.minimum(upper, lower)

    # s2/s3: partner points within half the distance to S
    t = rng.uniform(-0.5, 0.5, xs.size)
    ys = map_model.canonicalize_array(xs + t * d) if map_model.kind == "circle" else np.clip(
        xs + t * d, map_model.lo, map_model.hi
    )
    pair_ok = ~map_model.is_exceptional_array(ys)
    lhs = np.abs(log_fp - np.log(map_model.abs_deriv_array(np.where(pair_ok, ys, xs))))
    rhs = (B / d**beta) * map_model.metric_dist_array(xs, ys)
    s23_margin = np.where(pair_ok, rhs - lhs, np.inf)

    report = NonDegeneracyReport(
        B=B,
        beta=beta,
        sample_count=int(xs.size),
        vacuous=False,
        s1_failures=int(np.sum(s1_margin < 0.0)),
        s2_failures=int(np.sum(s23_margin < 0.0)),
        s3_failures=int(np.sum(s23_margin < 0.0)),
        s1_worst_margin=float(np.min(s1_margin)) if xs.size else math.inf,
        s2_worst_margin=float(np.min(s23_margin)) if xs.size else math.inf,
        s3_worst_margin=float(np.min(s23_margin)) if xs.size else math.inf,
    )
    return report
