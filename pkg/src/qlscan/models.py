"""Model families, parameter domains, and shared containers.

The package covers three conditionally specified families driven by iid
standard Gaussian innovations:

* AR(p):        X_t = phi_1 X_{t-1} + ... + phi_p X_{t-p} + xi_t
* ARCH(1):      X_t = sigma_t xi_t,  sigma_t^2 = alpha_0 + alpha_1 X_{t-1}^2
* GARCH(1,1):   X_t = sigma_t xi_t,  sigma_t^2 = alpha_0 + alpha_1 X_{t-1}^2
                                               + beta_1 sigma_{t-1}^2

Parameters live in a compact box intersected with a stationarity-type
constraint (sum of |phi_k| bounded away from 1 for AR, alpha_1 + beta_1
bounded away from 1 for ARCH/GARCH).  Everything downstream (likelihood,
estimation, scan statistics) consumes the containers defined here.

Index convention: observations are 1-based, X_1 .. X_n, matching the
sub-sample notation T_k = {1..k} and its complement {k+1..n} used by the
scan statistics.  Values before X_1 are treated as unobserved zeros.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

__all__ = [
    "CalibrationRequiredError",
    "DomainError",
    "ModelFamily",
    "ModelSpec",
    "ParamDomain",
    "ScanError",
    "ScanWindow",
    "SeriesParseError",
    "SeriesSegment",
    "ShapeError",
    "SizingError",
    "ar_spec",
    "arch_spec",
    "default_window",
    "garch_spec",
    "in_domain",
]

# Feasibility slack absorbing floating-point round-off from projections.
DOMAIN_ATOL = 1e-12

# Default distance kept between the parameter and the non-stationarity
# boundary (sum |phi_k| = 1, resp. alpha_1 + beta_1 = 1).
DEFAULT_MARGIN = 0.02

# Default bounds for the volatility intercept alpha_0.
DEFAULT_ALPHA0_LOWER = 1e-4
DEFAULT_ALPHA0_UPPER = 10.0

# Smallest sample size the default window policy accepts.
MIN_SAMPLE_SIZE = 20


class ShapeError(ValueError):
    """A vector or matrix argument has the wrong dimensions."""


class SizingError(ValueError):
    """A sample or segment is too short for the requested operation."""


class DomainError(ValueError):
    """A parameter vector lies outside the feasible domain."""


class SeriesParseError(ValueError):
    """A series file could not be parsed; the message names the line."""


class CalibrationRequiredError(LookupError):
    """No critical value is available for the requested (d, alpha)."""


class ScanError(RuntimeError):
    """A scan failed, e.g. estimation broke down on too many sub-samples."""


class ModelFamily(enum.Enum):
    """Supported conditional model families."""

    AR = "ar"
    ARCH = "arch"
    GARCH = "garch"


@dataclass(frozen=True)
class ParamDomain:
    """Compact parameter box with a stationarity margin.

    Parameters
    ----------
    lower, upper
        Coordinate-wise bounds, length d each.
    margin
        Distance kept from the non-stationarity boundary: the feasible
        set additionally satisfies ``sum(|phi_k|) <= 1 - margin`` for AR
        and ``alpha_1 + beta_1 <= 1 - margin`` for ARCH/GARCH.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    margin: float = DEFAULT_MARGIN

    def __post_init__(self) -> None:
        if len(self.lower) != len(self.upper):
            raise ShapeError(
                f"bound lengths differ: {len(self.lower)} vs {len(self.upper)}"
            )
        if not 0.0 < self.margin < 1.0:
            raise DomainError(f"margin must lie in (0, 1), got {self.margin}")
        for lo, hi in zip(self.lower, self.upper):
            if not lo < hi:
                raise DomainError(f"empty box: lower {lo} >= upper {hi}")

    @property
    def dim(self) -> int:
        return len(self.lower)

    def as_arrays(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return np.asarray(self.lower, dtype=float), np.asarray(self.upper, dtype=float)


def _default_domain(family: ModelFamily, p: int, margin: float) -> ParamDomain:
    c = 1.0 - margin
    if family is ModelFamily.AR:
        return ParamDomain(lower=(-c,) * p, upper=(c,) * p, margin=margin)
    if family is ModelFamily.ARCH:
        return ParamDomain(
            lower=(DEFAULT_ALPHA0_LOWER, 0.0),
            upper=(DEFAULT_ALPHA0_UPPER, c),
            margin=margin,
        )
    return ParamDomain(
        lower=(DEFAULT_ALPHA0_LOWER, 0.0, 0.0),
        upper=(DEFAULT_ALPHA0_UPPER, c, c),
        margin=margin,
    )


@dataclass(frozen=True)
class ModelSpec:
    """A model family together with its order and parameter domain.

    Parameters
    ----------
    family
        One of the three supported families.
    p
        Autoregression order.  Must be 1 for ARCH and GARCH, where the
        conditional variance looks one step back.
    domain
        Feasible parameter set.  Defaults to a symmetric box for AR and
        to ``alpha_0 in [1e-4, 10], alpha_1, beta_1 in [0, 1 - margin]``
        for the volatility families.

    Attributes
    ----------
    d
        Parameter dimension: p for AR, 2 for ARCH(1), 3 for GARCH(1,1).
    """

    family: ModelFamily
    p: int = 1
    domain: ParamDomain = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.p < 1:
            raise ShapeError(f"order p must be >= 1, got {self.p}")
        if self.family is not ModelFamily.AR and self.p != 1:
            raise ShapeError(f"{self.family.value} supports p=1 only, got {self.p}")
        if self.domain is None:
            object.__setattr__(
                self, "domain", _default_domain(self.family, self.p, DEFAULT_MARGIN)
            )
        if self.domain.dim != self.d:
            raise ShapeError(
                f"domain dimension {self.domain.dim} does not match d={self.d}"
            )

    @property
    def d(self) -> int:
        if self.family is ModelFamily.AR:
            return self.p
        return 2 if self.family is ModelFamily.ARCH else 3

    def check_theta(self, theta: ArrayLike) -> NDArray[np.float64]:
        """Validate shape and return theta as a float vector of length d."""
        arr = np.atleast_1d(np.asarray(theta, dtype=float))
        if arr.ndim != 1 or arr.shape[0] != self.d:
            raise ShapeError(
                f"theta has shape {np.shape(theta)}, expected ({self.d},)"
            )
        return arr


def ar_spec(p: int = 1, margin: float = DEFAULT_MARGIN) -> ModelSpec:
    """AR(p) spec with the default symmetric domain."""
    return ModelSpec(ModelFamily.AR, p, _default_domain(ModelFamily.AR, p, margin))


def arch_spec(margin: float = DEFAULT_MARGIN) -> ModelSpec:
    """ARCH(1) spec with the default domain."""
    return ModelSpec(ModelFamily.ARCH, 1, _default_domain(ModelFamily.ARCH, 1, margin))


def garch_spec(margin: float = DEFAULT_MARGIN) -> ModelSpec:
    """GARCH(1,1) spec with the default domain."""
    return ModelSpec(
        ModelFamily.GARCH, 1, _default_domain(ModelFamily.GARCH, 1, margin)
    )


def in_domain(spec: ModelSpec, theta: ArrayLike) -> bool:
    """Whether theta lies in the feasible set of ``spec``.

    The feasible set is the box ``[lower, upper]`` intersected with the
    stationarity constraint: ``sum |phi_k| <= 1 - margin`` for AR,
    ``alpha_1 + beta_1 <= 1 - margin`` for ARCH/GARCH.  Membership is
    decided with a small absolute slack so that points produced by a
    floating-point projection onto the boundary test as feasible.
    """
    arr = spec.check_theta(theta)
    lo, hi = spec.domain.as_arrays()
    tol = DOMAIN_ATOL
    if np.any(arr < lo - tol) or np.any(arr > hi + tol):
        return False
    c = 1.0 - spec.domain.margin
    if spec.family is ModelFamily.AR:
        return bool(np.sum(np.abs(arr)) <= c + tol)
    return bool(np.sum(arr[1:]) <= c + tol)


@dataclass(frozen=True)
class SeriesSegment:
    """A full observed series plus a 1-based window of interest.

    ``data`` always holds the complete series X_1 .. X_n; ``start`` and
    ``end`` delimit the sub-sample T = {start, ..., end} (inclusive)
    that likelihood sums range over.  Keeping the full series around
    matters because the truncated likelihood of any sub-sample looks at
    observations before its own start, all the way back to X_1.
    """

    data: NDArray[np.float64]
    start: int
    end: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=float)
        if arr.ndim != 1:
            raise ShapeError(f"series must be 1-d, got shape {arr.shape}")
        if arr.size == 0:
            raise SizingError("series is empty")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0]) + 1
            raise ValueError(f"series contains a non-finite value at index {bad}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        n = arr.shape[0]
        if not (1 <= self.start <= self.end <= n):
            raise SizingError(
                f"window [{self.start}, {self.end}] invalid for series of length {n}"
            )

    @property
    def n(self) -> int:
        """Length of the full series."""
        return int(self.data.shape[0])

    @property
    def card(self) -> int:
        """Number of indices in the window."""
        return self.end - self.start + 1

    @classmethod
    def full(cls, data: ArrayLike) -> SeriesSegment:
        arr = np.asarray(data, dtype=float)
        return cls(arr, 1, int(arr.shape[0]))

    @classmethod
    def prefix(cls, data: ArrayLike, k: int) -> SeriesSegment:
        """T_k = {1, ..., k}."""
        return cls(np.asarray(data, dtype=float), 1, k)

    @classmethod
    def suffix(cls, data: ArrayLike, k: int) -> SeriesSegment:
        """The complement {k+1, ..., n}."""
        arr = np.asarray(data, dtype=float)
        return cls(arr, k + 1, int(arr.shape[0]))


@dataclass(frozen=True)
class ScanWindow:
    """Candidate change points Pi_n = {v_n, ..., n - v_n}."""

    n: int
    v_n: int

    def __post_init__(self) -> None:
        if self.v_n < 1 or self.v_n > self.n - self.v_n:
            raise SizingError(
                f"v_n={self.v_n} leaves no candidate change points for n={self.n}"
            )

    @property
    def indices(self) -> NDArray[np.int64]:
        """All candidate k, ascending."""
        return np.arange(self.v_n, self.n - self.v_n + 1, dtype=np.int64)

    @property
    def size(self) -> int:
        return self.n - 2 * self.v_n + 1


def default_window(spec: ModelSpec, n: int) -> ScanWindow:
    """Default scan window for a sample of size n.

    The trimming parameter grows slowly with n:

    * AR:          v_n = floor((ln n)^2)
    * ARCH/GARCH:  v_n = floor((ln n)^(5/2))

    and is then clamped into [d + 1, floor(n/2) - 1] so that every
    sub-sample is long enough to estimate d parameters and the candidate
    set is non-empty.

    Raises
    ------
    SizingError
        If n is below the minimum sample size for this family.
    """
    n_min = max(MIN_SAMPLE_SIZE, 2 * spec.d + 4)
    if n < n_min:
        raise SizingError(
            f"n={n} too small for a {spec.family.value} scan; need n >= {n_min}"
        )
    ln = math.log(n)
    raw = ln * ln if spec.family is ModelFamily.AR else ln**2.5
    v = int(math.floor(raw))
    v = max(v, spec.d + 1)
    v = min(v, n // 2 - 1)
    return ScanWindow(n=n, v_n=v)
