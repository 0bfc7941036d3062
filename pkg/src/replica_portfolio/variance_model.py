"""Distributions of per-asset return variances and their inverse moments."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from numpy.typing import NDArray

# Domain tag mixed into the seed so variance draws never share a stream with
# the return entries generated from the same instance seed.
_VARIANCE_STREAM = 0x5641_5249


@dataclass(frozen=True)
class Identical:
    s: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.s) and self.s > 0):
            raise ValueError(f"identical variance must be positive, got s={self.s}")


@dataclass(frozen=True)
class TwoPoint:
    """``s_i = 1`` with probability ``r``, otherwise ``s_tilde``."""

    r: float
    s_tilde: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"r must lie in [0, 1], got {self.r}")
        if not (math.isfinite(self.s_tilde) and self.s_tilde > 0):
            raise ValueError(f"s_tilde must be positive, got {self.s_tilde}")


@dataclass(frozen=True)
class Uniform:
    """Continuous uniform variance on ``[l_s, u_s]``."""

    l_s: float
    u_s: float

    def __post_init__(self) -> None:
        if not (0 < self.l_s < self.u_s and math.isfinite(self.u_s)):
            raise ValueError(f"need 0 < l_s < u_s, got l_s={self.l_s}, u_s={self.u_s}")


@dataclass(frozen=True)
class Explicit:
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("explicit variances must be non-empty")
        if any(not (math.isfinite(v) and v > 0) for v in values):
            raise ValueError("explicit variances must be positive and finite")
        object.__setattr__(self, "values", values)


VarianceSpec = Union[Identical, TwoPoint, Uniform, Explicit]


@dataclass(frozen=True)
class InverseMoments:
    """Population averages ``m1 = <1/s>`` and ``m2 = <1/s^2>``."""

    m1: float
    m2: float

    def __post_init__(self) -> None:
        if not (self.m1 > 0 and self.m2 > 0):
            raise ValueError("inverse moments must be positive")
        # m2 >= m1^2 is Jensen; allow round-off slack only.
        if self.m2 < self.m1**2 * (1 - 1e-12):
            raise ValueError(f"m2={self.m2} < m1^2={self.m1**2}")


PRESETS: dict[str, VarianceSpec] = {
    "1A": TwoPoint(r=21 / 25, s_tilde=2 / 27),
    "1B": TwoPoint(r=14 / 23, s_tilde=3 / 26),
    "1C": TwoPoint(r=5 / 21, s_tilde=4 / 25),
    "2A'": Uniform(1.0, 2.0),
    "2B'": Uniform(1.0, 3.0),
    "2C'": Uniform(1.0, 4.0),
}


def preset(name: str) -> VarianceSpec:
    key = name.strip().upper()
    # tolerate shells eating the prime: 2A == 2A'
    if key in {"2A", "2B", "2C"}:
        key += "'"
    try:
        return PRESETS[key]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def analytic_moments(spec: VarianceSpec) -> InverseMoments:
    if isinstance(spec, Identical):
        return InverseMoments(1 / spec.s, 1 / spec.s**2)
    if isinstance(spec, TwoPoint):
        return InverseMoments(
            spec.r + (1 - spec.r) / spec.s_tilde,
            spec.r + (1 - spec.r) / spec.s_tilde**2,
        )
    if isinstance(spec, Uniform):
        lo, hi = spec.l_s, spec.u_s
        return InverseMoments(math.log(hi / lo) / (hi - lo), 1 / (hi * lo))
    if isinstance(spec, Explicit):
        return empirical_moments(np.asarray(spec.values))
    raise TypeError(f"not a variance spec: {spec!r}")


def empirical_moments(s: NDArray[np.float64]) -> InverseMoments:
    inv = 1.0 / np.asarray(s, dtype=np.float64)
    return InverseMoments(float(inv.mean()), float((inv**2).mean()))


def variance_rng(seed: int) -> np.random.Generator:
    """Counter-based stream for variance draws; draw ``i`` belongs to asset ``i``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, _VARIANCE_STREAM])))


def sample_variances(spec: VarianceSpec, n: int, seed: int) -> NDArray[np.float64]:
    """Draw ``n`` i.i.d. variances.

    Every asset consumes exactly one uniform from a Philox stream keyed by
    ``seed``, so asset ``i`` always sees counter ``i``: a longer draw with the
    same seed extends a shorter one.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(spec, Explicit):
        if len(spec.values) != n:
            raise ValueError(f"explicit spec holds {len(spec.values)} variances, asked for {n}")
        return np.array(spec.values, dtype=np.float64)
    u = variance_rng(seed).random(n)
    if isinstance(spec, Identical):
        return np.full(n, spec.s)
    if isinstance(spec, TwoPoint):
        return np.where(u < spec.r, 1.0, spec.s_tilde)
    if isinstance(spec, Uniform):
        return spec.l_s + (spec.u_s - spec.l_s) * u
    raise TypeError(f"not a variance spec: {spec!r}")


# -- textual form --------------------------------------------------------------

_KIND_ALIASES = {
    "identical": "identical",
    "two-point": "two-point",
    "twopoint": "two-point",
    "uniform": "uniform",
    "explicit": "explicit",
}


def parse_variance(text: str) -> VarianceSpec:
    """Parse ``kind:key=value,...``.

    Grammar::

        identical:s=<float>
        two-point:r=<float>,s=<float>      (s is s_tilde)
        uniform:l=<float>,u=<float>
        explicit:file=<path>               (one variance per line)
        preset:<name>                      (1A, 1B, 1C, 2A', 2B', 2C')
    """
    kind, _, body = text.strip().partition(":")
    kind = kind.strip().lower()
    if kind == "preset":
        return preset(body)
    if kind not in _KIND_ALIASES:
        raise ValueError(f"unknown variance kind {kind!r} in {text!r}")
    kind = _KIND_ALIASES[kind]
    params: dict[str, str] = {}
    for item in filter(None, (p.strip() for p in body.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ValueError(f"expected key=value, got {item!r} in {text!r}")
        params[key.strip().lower()] = value.strip()

    def num(*keys: str) -> float:
        for k in keys:
            if k in params:
                return float(params[k])
        raise ValueError(f"{kind} variance needs {keys[0]}=... in {text!r}")

    if kind == "identical":
        return Identical(num("s")) if params else Identical()
    if kind == "two-point":
        return TwoPoint(r=num("r"), s_tilde=num("s", "s_tilde"))
    if kind == "uniform":
        return Uniform(num("l", "l_s"), num("u", "u_s"))
    if "file" not in params:
        raise ValueError(f"explicit variance needs file=<path> in {text!r}")
    values = np.loadtxt(Path(params["file"]), dtype=np.float64, ndmin=1)
    return Explicit(tuple(values))


def spec_to_dict(spec: VarianceSpec) -> dict:
    if isinstance(spec, Identical):
        return {"kind": "identical", "s": spec.s}
    if isinstance(spec, TwoPoint):
        return {"kind": "two-point", "r": spec.r, "s_tilde": spec.s_tilde}
    if isinstance(spec, Uniform):
        return {"kind": "uniform", "l_s": spec.l_s, "u_s": spec.u_s}
    return {"kind": "explicit", "values": list(spec.values)}


def spec_from_dict(d: dict) -> VarianceSpec:
    kind = d["kind"]
    if kind == "identical":
        return Identical(d["s"])
    if kind == "two-point":
        return TwoPoint(d["r"], d["s_tilde"])
    if kind == "uniform":
        return Uniform(d["l_s"], d["u_s"])
    if kind == "explicit":
        return Explicit(tuple(d["values"]))
    raise ValueError(f"unknown variance kind {kind!r}")
