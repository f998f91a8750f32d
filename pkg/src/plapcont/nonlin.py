"""Nonlinearity families with a singular origin and their growth certificates.

The reaction terms f may blow up (with either sign) as s -> 0+ no faster
than a power s^-beta with beta < 1, and must grow strictly slower than
s^(p-1) at infinity.  ``validate_assumptions`` certifies both facts on a
dyadic sample and extracts the constants the barrier construction needs:

  beta     singularity exponent, fitted as the log-log slope at 0+
  a_const  coefficient of the eventual lower bound f(s) >= a_const/s^beta
  a_onset  argument size past which that lower bound is enforced
  b_const  global coefficient with f(s) > -b_const/s^beta everywhere
  c_small  small-argument coefficient with |f(s)| <= c_small/s^beta

All estimates are rounded conservatively: lower-bound coefficients down,
upper-bound coefficients and onsets up.  The certificates are sampled,
not symbolic, so one code path serves the built-in families and custom
callables alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

# dyadic sample: quarter-octave spacing over [2^-20, 2^20]
_SAMPLE_EXPONENTS = np.arange(-20.0, 20.0 + 1e-9, 0.25)
_SAMPLES = 2.0**_SAMPLE_EXPONENTS
_DEEP_K = np.arange(12, 21)  # octaves used for the slope fit at 0+
_BETA_FLOOR = 0.02  # nearly bounded singularities still get a valid exponent
_BETA_CEIL = 0.999


class DomainError(ValueError):
    """The nonlinearity was evaluated at a nonpositive argument."""


_FAMILY_PARAMS = {
    "a": ("q", "beta"),
    "b": ("beta", "alpha"),
    "c": ("a_coef", "alpha"),
    "d": ("alpha", "q"),
    "e": ("alpha",),
    "f": (),
    "custom": (),
}


def _check_params(family: str, params: Mapping[str, float]) -> None:
    def need(name):
        if name not in params:
            raise ValueError(f"family {family!r} needs parameter {name!r}")
        return float(params[name])

    if family == "a":
        q, beta = need("q"), need("beta")
        if q <= 0.0 or beta <= 0.0:
            raise ValueError("family a needs q > 0 and beta > 0")
    elif family == "b":
        beta, alpha = need("beta"), need("alpha")
        if not (0.0 < beta < alpha < 1.0):
            raise ValueError("family b needs 0 < beta < alpha < 1")
    elif family == "c":
        a, alpha = need("a_coef"), need("alpha")
        if a <= 0.0 or not (0.0 < alpha < 1.0):
            raise ValueError("family c needs a_coef > 0 and alpha in (0, 1)")
    elif family == "d":
        alpha, q = need("alpha"), need("q")
        if not (0.0 < alpha < 1.0) or q <= 0.0:
            raise ValueError("family d needs alpha in (0, 1) and q > 0")
    elif family == "e":
        alpha = need("alpha")
        if not (0.0 < alpha < 1.0):
            raise ValueError("family e needs alpha in (0, 1)")
    elif family in ("f", "custom"):
        pass
    else:
        raise ValueError(f"unknown family {family!r}")


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """A reaction term f(s) on s > 0, singular or log-singular at 0.

    Built-in families (parameter ranges validated at construction; the
    p-dependent growth condition is checked by ``validate_assumptions``):

      a: s^q - s^-beta          q > 0, beta > 0
      b: s^-beta - s^-alpha     0 < beta < alpha < 1
      c: a_coef - s^-alpha      a_coef > 0, 0 < alpha < 1
      d: s^-alpha + s^q         0 < alpha < 1, q > 0
      e: s^-alpha               0 < alpha < 1
      f: log(s)

    ``custom`` takes a vectorized callable (and optionally its derivative).
    """

    family: str
    params: Mapping[str, float] = field(default_factory=dict)
    fn: Callable[[np.ndarray], np.ndarray] | None = None
    dfn: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        _check_params(self.family, self.params)
        if self.family == "custom" and self.fn is None:
            raise ValueError("custom family needs a callable")
        object.__setattr__(self, "params", dict(self.params))


FAMILY_NAMES = frozenset(_FAMILY_PARAMS)


def make_nonlinearity(family: str, **params: float) -> Nonlinearity:
    """Construct a built-in family from keyword parameters."""
    if family == "custom":
        raise ValueError("custom family needs a callable; construct Nonlinearity directly")
    expected = set(_FAMILY_PARAMS.get(family, ()))
    extra = set(params) - expected
    if extra:
        raise ValueError(f"family {family!r} does not take parameters {sorted(extra)}")
    return Nonlinearity(family=family, params=params)


def eval_f(spec: Nonlinearity, s) -> np.ndarray | float:
    """Evaluate f at positive arguments; raises DomainError off-domain."""
    arr = np.asarray(s, dtype=float)
    if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
        raise DomainError("nonlinearity arguments must be positive and finite")
    p = spec.params
    fam = spec.family
    if fam == "a":
        out = arr ** p["q"] - arr ** (-p["beta"])
    elif fam == "b":
        out = arr ** (-p["beta"]) - arr ** (-p["alpha"])
    elif fam == "c":
        out = p["a_coef"] - arr ** (-p["alpha"])
    elif fam == "d":
        out = arr ** (-p["alpha"]) + arr ** p["q"]
    elif fam == "e":
        out = arr ** (-p["alpha"])
    elif fam == "f":
        out = np.log(arr)
    else:
        out = np.asarray(spec.fn(arr), dtype=float)
    return out if arr.shape else float(out)


def f_prime(spec: Nonlinearity, s) -> np.ndarray | float:
    """Derivative of f; analytic for built-in families, central difference otherwise."""
    arr = np.asarray(s, dtype=float)
    if np.any(arr <= 0.0):
        raise DomainError("nonlinearity arguments must be positive")
    p = spec.params
    fam = spec.family
    if fam == "a":
        out = p["q"] * arr ** (p["q"] - 1.0) + p["beta"] * arr ** (-p["beta"] - 1.0)
    elif fam == "b":
        out = -p["beta"] * arr ** (-p["beta"] - 1.0) + p["alpha"] * arr ** (-p["alpha"] - 1.0)
    elif fam == "c":
        out = p["alpha"] * arr ** (-p["alpha"] - 1.0)
    elif fam == "d":
        out = -p["alpha"] * arr ** (-p["alpha"] - 1.0) + p["q"] * arr ** (p["q"] - 1.0)
    elif fam == "e":
        out = -p["alpha"] * arr ** (-p["alpha"] - 1.0)
    elif fam == "f":
        out = 1.0 / arr
    elif spec.dfn is not None:
        out = np.asarray(spec.dfn(arr), dtype=float)
    else:
        step = np.maximum(1e-6 * arr, 1e-12)
        out = (np.asarray(spec.fn(arr + step)) - np.asarray(spec.fn(arr - step))) / (2.0 * step)
    return out if arr.shape else float(out)


@dataclass(eq=False)
class AssumptionReport:
    """Sampled growth certificates for one nonlinearity at one exponent p.

    ``checks`` holds one boolean per hypothesis; ``witness`` records a
    sample point for each failed check.  ``eps_bar_table`` caches, per
    truncation ceiling Lambda, the large-argument slope eps_bar together
    with the split point a1 and small-side coefficient c_split used by
    the upper-barrier constants.
    """

    spec: Nonlinearity
    p: float
    beta: float
    a_const: float
    a_onset: float
    b_const: float
    c_small: float
    checks: dict
    witness: dict
    eps_bar_table: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def split_for(self, eps_bar: float) -> tuple[float, float]:
        """Smallest sampled onset a1 with |f(s)| <= eps_bar s^(p-1) past it,
        plus the conservative coefficient for |f(s)| <= c/s^beta below it."""
        if not (eps_bar > 0.0 and math.isfinite(eps_bar)):
            raise ValueError("eps_bar must be positive and finite")
        fvals = np.asarray(eval_f(self.spec, _SAMPLES))
        grow = np.abs(fvals) - eps_bar * _SAMPLES ** (self.p - 1.0)
        ok_from = None
        for i in range(_SAMPLES.size - 1, -1, -1):
            if grow[i] > 0.0:
                break
            ok_from = i
        if ok_from is None:
            raise ValueError("no sampled split point satisfies the slope bound")
        if ok_from == 0:
            a1 = float(_SAMPLES[0])
        else:
            # place the split at the actual crossing inside the bracketing
            # octave, not one sample early, so the growth bound holds from
            # a1 onward and not merely from the next sample
            lo, hi = float(_SAMPLES[ok_from - 1]), float(_SAMPLES[ok_from])
            for _ in range(80):
                mid = math.sqrt(lo * hi)
                if abs(float(eval_f(self.spec, mid))) <= eps_bar * mid ** (self.p - 1.0):
                    hi = mid
                else:
                    lo = mid
            a1 = hi
        # dense certificate across the thin-margin zone just above the split
        local = np.geomspace(a1, min(a1 * 16.0, float(_SAMPLES[-1]) * 2.0), 257)
        lf = np.abs(np.asarray(eval_f(self.spec, local)))
        bad = local[lf > eps_bar * local ** (self.p - 1.0) * (1.0 + 1e-9)]
        if bad.size:
            a1 = float(np.max(bad)) * (1.0 + 1e-6)
        small = np.append(_SAMPLES[_SAMPLES <= a1], a1)
        c_split = float(np.max(np.abs(np.asarray(eval_f(self.spec, small)))
                               * small**self.beta, initial=0.0)) * 1.001
        return float(a1), max(c_split, 1e-12)


def _fit_beta(spec: Nonlinearity) -> float | None:
    """Log-log slope of |f| on the deepest octaves; None if degenerate."""
    s = 2.0 ** (-_DEEP_K.astype(float))
    vals = np.abs(np.asarray(eval_f(spec, s)))
    if np.any(vals < 1e-290):
        return None
    slope = -np.polyfit(-_DEEP_K.astype(float), np.log2(vals), 1)[0]
    return float(slope)


def validate_assumptions(spec: Nonlinearity, p: "float") -> AssumptionReport:
    """Certify the growth hypotheses on the dyadic sample and fit constants.

    The returned report carries pass/fail flags for: sublinear growth of
    f(s)/s^(p-1) at infinity, the eventual singular lower bound, the
    small-argument bound with exponent below one, and the global lower
    bound f(s) > -b/s^beta.
    """
    from .plap import as_p

    pv = as_p(p)
    checks: dict = {}
    witness: dict = {}
    fvals = np.asarray(eval_f(spec, _SAMPLES))

    # growth at infinity: the ratio to s^(p-1) must decay over the top octaves
    top = _SAMPLE_EXPONENTS >= 10.0
    ratios = np.abs(fvals[top]) / _SAMPLES[top] ** (pv - 1.0)
    decaying = bool(np.all(np.diff(ratios) <= 1e-12 * np.maximum(ratios[:-1], 1e-300)))
    shrinks = bool(ratios[-1] < (1.0 - 1e-6) * max(ratios[0], 1e-300)) or ratios[-1] < 1e-12
    checks["f1_sublinear"] = decaying and shrinks
    if not checks["f1_sublinear"]:
        witness["f1_sublinear"] = float(_SAMPLES[top][int(np.argmax(ratios))])

    # singularity exponent from the slope at 0+
    slope = _fit_beta(spec)
    if slope is None:
        beta = _BETA_FLOOR
        checks["f2ii_small_bound"] = True
    else:
        beta = min(max(slope, _BETA_FLOOR), 2.0)
        checks["f2ii_small_bound"] = beta < _BETA_CEIL
        if not checks["f2ii_small_bound"]:
            witness["f2ii_small_bound"] = float(2.0 ** (-_DEEP_K[-1]))
    beta = min(beta, _BETA_CEIL)

    m = fvals * _SAMPLES**beta  # f(s) s^beta on the sample

    # eventual lower bound: pick the onset minimizing the induced threshold
    # scale A^(p+beta-1)/a, among onsets past which m stays positive
    suffix_min = np.minimum.accumulate(m[::-1])[::-1]
    best_idx = None
    best_score = np.inf
    for j in range(1, _SAMPLES.size):
        tail = suffix_min[j]
        if tail <= 0.0:
            continue
        score = _SAMPLES[j] ** (pv + beta - 1.0) / tail
        if score < best_score:
            best_score = score
            best_idx = j
    if best_idx is None:
        checks["f2i_lower_bound"] = False
        witness["f2i_lower_bound"] = float(_SAMPLES[-1])
        a_const, a_onset = 0.0, math.inf
    else:
        checks["f2i_lower_bound"] = True
        # onset sits at the first sample the suffix guarantee covers; the
        # constant takes a 10% haircut against dips between sample points
        a_onset = float(_SAMPLES[best_idx])
        a_const = float(suffix_min[best_idx]) * 0.9

    # global lower bound f(s) > -b/s^beta
    neg = float(np.max(-m, initial=0.0))
    b_const = max(1e-3, 1.001 * neg)
    checks["global_lower_bound"] = bool(np.isfinite(b_const)) and checks["f1_sublinear"]

    small = _SAMPLES <= 1.0
    c_small = float(np.max(np.abs(fvals[small]) * _SAMPLES[small] ** beta)) * 1.001

    return AssumptionReport(
        spec=spec,
        p=pv,
        beta=float(beta),
        a_const=a_const,
        a_onset=a_onset,
        b_const=float(b_const),
        c_small=float(max(c_small, 1e-12)),
        checks=checks,
        witness=witness,
    )
