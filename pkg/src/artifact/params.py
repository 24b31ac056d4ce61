"""Model primitives: cost types, commitment grids, discount rates and the
complete-information benchmark."""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ParamError(ValueError):
    """Raised when an input violates a documented precondition."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NonGenericError(ParamError):
    """Knife-edge input where the limit object is not unique.

    `candidates` holds every admissible outcome so callers can report both.
    """

    def __init__(self, message, candidates=None, field=None):
        super().__init__(message, field)
        self.candidates = candidates or []


@dataclass(frozen=True)
class PriceGrid:
    points: tuple

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size == 0:
            raise ParamError("grid must be a non-empty list of prices", "points")
        if np.any(np.diff(pts) <= 0):
            raise ParamError("grid points must be strictly increasing", "points")
        if pts[0] < 0 or pts[-1] > 1:
            raise ParamError("grid points must lie in [0, 1]", "points")
        object.__setattr__(self, "points", tuple(float(p) for p in pts))

    def __len__(self):
        return len(self.points)

    @property
    def array(self):
        return np.asarray(self.points)

    def index(self, p, tol=1e-12):
        """Index of the grid point equal to `p`, or None."""
        arr = self.array
        k = int(np.searchsorted(arr, p - tol))
        if k < arr.size and abs(arr[k] - p) <= tol:
            return k
        return None

    def __contains__(self, p):
        return self.index(p) is not None

    def max_gap(self):
        """Largest distance from any p in [0, 1] to the nearest grid point."""
        arr = self.array
        edges = [arr[0], 1.0 - arr[-1]]
        if arr.size > 1:
            edges.append(float(np.max(np.diff(arr))) / 2)
        return float(max(edges))

    def is_dense(self, nu):
        return self.max_gap() <= nu + 1e-15

    def with_points(self, extra):
        """Grid with the extra prices merged in (duplicates dropped)."""
        return PriceGrid(tuple(_merge(list(self.points) + list(extra))))

    def floor(self, p):
        """Largest grid point <= p (None if there is none)."""
        arr = self.array
        k = int(np.searchsorted(arr, p + 1e-12, side="right")) - 1
        return float(arr[k]) if k >= 0 else None

    def below(self, p):
        """Largest grid point strictly below p."""
        arr = self.array
        k = int(np.searchsorted(arr, p - 1e-12, side="left")) - 1
        return float(arr[k]) if k >= 0 else None

    def above(self, p):
        """Smallest grid point strictly above p."""
        arr = self.array
        k = int(np.searchsorted(arr, p + 1e-12, side="right"))
        return float(arr[k]) if k < arr.size else None


def _merge(values, tol=1e-12):
    out = []
    for v in sorted(float(x) for x in values):
        if not out or v - out[-1] > tol:
            out.append(v)
    return out


def build_commitment_grid(nu, geometric_base=None, depth=None, max_points=5000,
                          mode="anchored"):
    """Commitment-price grid with the point 1 and the sequence 1-(1-nu)^j.

    `depth` is the number of geometric points; by default the sequence runs
    until its distance to 1 drops below min(nu**2, 1e-3).  mode="anchored" also adds
    evenly spaced anchors k*nu, mode="geometric" keeps only 0, the sequence
    and 1 (still nu-dense since consecutive gaps shrink).
    """
    if not (0 < nu < 1):
        raise ParamError("nu must lie in (0, 1)", "nu")
    base = 1.0 - nu if geometric_base is None else float(geometric_base)
    if not (0 < base < 1):
        raise ParamError("geometric_base must lie in (0, 1)", "geometric_base")
    if depth is None:
        depth = int(math.ceil(math.log(min(nu * nu, 1e-3)) / math.log(base)))
    depth = max(1, min(int(depth), max_points))
    geo = 1.0 - base ** np.arange(1, depth + 1)
    pts = [0.0, 1.0] + list(geo)
    if mode == "anchored":
        k = int(math.floor(1.0 / nu))
        pts += list(np.arange(0, k + 1) * nu)
    elif mode != "geometric":
        raise ParamError(f"unknown grid mode {mode!r}", "grid_mode")
    grid = PriceGrid(tuple(_merge(p for p in pts if 0 <= p <= 1)))
    if len(grid) > max_points:
        raise ParamError("grid exceeds max_points; raise nu or lower depth", "nu")
    return grid


def uniform_weights(grid):
    n = len(grid)
    return np.full(n, 1.0 / n)


@dataclass(frozen=True)
class GameParams:
    costs: tuple
    adoption_costs: tuple | None = None
    r_b: float = 1.0
    r_s: float = 1.0
    eps: float = 0.01
    nu: float = 0.05
    buyer_grid: PriceGrid | None = None
    seller_grid: PriceGrid | None = None
    mu_b: tuple | None = None
    mu_s: tuple | None = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n(self):
        return len(self.costs)

    @property
    def theta(self):
        return np.asarray(self.costs, dtype=float)

    def mu_b_at(self, p):
        k = self.buyer_grid.index(p)
        return 0.0 if k is None else self.mu_b[k]

    def mu_s_at(self, p):
        k = self.seller_grid.index(p)
        return 0.0 if k is None else self.mu_s[k]

    def price(self, theta):
        return rubinstein_price(theta, self.r_b, self.r_s)

    def replace(self, **kw):
        d = {k: getattr(self, k) for k in (
            "costs", "adoption_costs", "r_b", "r_s", "eps", "nu",
            "buyer_grid", "seller_grid", "mu_b", "mu_s")}
        d.update(kw)
        return GameParams(**d)


def make_params(costs, adoption_costs=None, r_b=1.0, r_s=1.0, eps=0.01, nu=0.05,
                grid_mode="anchored", mu_mode="uniform", extra_prices=()):
    """Build and validate GameParams with grids generated from nu."""
    if mu_mode != "uniform":
        raise ParamError(f"unknown mu mode {mu_mode!r}", "mu_mode")
    grid = build_commitment_grid(nu, mode=grid_mode)
    if extra_prices:
        grid = grid.with_points(extra_prices)
    mu = tuple(uniform_weights(grid))
    raw = GameParams(
        costs=tuple(float(c) for c in costs),
        adoption_costs=None if adoption_costs is None else tuple(float(c) for c in adoption_costs),
        r_b=float(r_b), r_s=float(r_s), eps=float(eps), nu=float(nu),
        buyer_grid=grid, seller_grid=grid, mu_b=mu, mu_s=mu,
        meta={"grid_mode": grid_mode, "mu_mode": mu_mode},
    )
    return validate_params(raw)


def validate_params(raw):
    """Return `raw` unchanged if every invariant holds, else raise ParamError."""
    th = list(raw.costs)
    if len(th) == 0:
        raise ParamError("at least one cost type is required", "costs")
    if any(not (0 < t < 1) for t in th):
        raise ParamError("costs must lie in (0, 1)", "costs")
    if any(b <= a for a, b in zip(th, th[1:])):
        raise ParamError("costs not increasing", "costs")
    if raw.adoption_costs is not None:
        c = list(raw.adoption_costs)
        if len(c) != len(th):
            raise ParamError("one adoption cost per technology is required", "adoption_costs")
        if c[-1] != 0:
            raise ParamError("the default technology must be free to adopt (c_n = 0)",
                             "adoption_costs")
        if any(b >= a for a, b in zip(c, c[1:])):
            raise ParamError("adoption costs must be strictly decreasing", "adoption_costs")
    if not (0 < raw.eps < 1):
        raise ParamError("eps must be interior to (0, 1)", "eps")
    if not (0 < raw.nu < 1):
        raise ParamError("nu must lie in (0, 1)", "nu")
    if not (raw.r_b > 0 and raw.r_s > 0):
        raise ParamError("discount rates must be positive", "r_b" if raw.r_b <= 0 else "r_s")
    for name in ("buyer_grid", "seller_grid"):
        grid = getattr(raw, name)
        if grid is None:
            raise ParamError(f"{name} is missing", name)
        if not grid.is_dense(raw.nu):
            raise ParamError(f"{name} leaves a gap wider than nu", name)
    sg = raw.seller_grid.array
    if sg[-1] != 1.0:
        raise ParamError("seller grid must contain the price 1", "seller_grid")
    below_one = sg[sg < 1.0]
    if below_one.size == 0 or 1.0 - below_one[-1] > raw.nu ** 2 + 1e-15:
        raise ParamError("seller grid must approach 1 from below", "seller_grid")
    for name, grid in (("mu_b", raw.buyer_grid), ("mu_s", raw.seller_grid)):
        w = getattr(raw, name)
        if w is None or len(w) != len(grid):
            raise ParamError(f"{name} must have one weight per grid point", name)
        w = np.asarray(w, dtype=float)
        if np.any(w <= 0):
            raise ParamError(f"{name} must have full support", name)
        if abs(w.sum() - 1.0) > 1e-9:
            raise ParamError(f"{name} must sum to 1", name)
    return raw


def rubinstein_price(theta, r_b=1.0, r_s=1.0):
    """Alternating-offers price against a seller with cost theta."""
    if r_b <= 0 or r_s <= 0:
        raise ParamError("discount rates must be positive", "r_b")
    return r_b / (r_b + r_s) + theta * r_s / (r_b + r_s)


@dataclass(frozen=True)
class BenchmarkOutcome:
    adopt: bool
    price: float
    buyer_payoff: float
    seller_payoff: float
    efficient: bool


def observable_benchmark(theta1, theta2, c, r_b=1.0, r_s=1.0):
    """Adoption choice when the buyer sees the seller's cost."""
    if not (0 < theta1 < theta2 < 1):
        raise ParamError("costs not increasing", "costs")
    p1 = rubinstein_price(theta1, r_b, r_s)
    p2 = rubinstein_price(theta2, r_b, r_s)
    adopt = c <= (p1 - theta1) - (p2 - theta2)
    price = p1 if adopt else p2
    seller = (p1 - theta1 - c) if adopt else (p2 - theta2)
    efficient = adopt == (c < theta2 - theta1)
    return BenchmarkOutcome(adopt, price, 1.0 - price, seller, efficient)


# Config files are flat "key = value" lines; lists are comma separated.
CONFIG_DEFAULTS = {
    "theta": None,
    "adoption_costs": None,
    "r_b": 1.0,
    "r_s": 1.0,
    "eps": 0.01,
    "nu": 0.05,
    "grid_mode": "anchored",
    "mu_mode": "uniform",
    "seed": 0,
}

_LIST_KEYS = {"theta", "adoption_costs"}
_FLOAT_KEYS = {"r_b", "r_s", "eps", "nu"}


def parse_value(key, text):
    if key not in CONFIG_DEFAULTS:
        raise ParamError(f"unknown config key {key!r}", key)
    text = str(text).strip()
    try:
        if key in _LIST_KEYS:
            vals = [float(v) for v in text.replace("[", "").replace("]", "").split(",") if v.strip()]
            return tuple(vals)
        if key in _FLOAT_KEYS:
            return float(text)
        if key == "seed":
            return int(text)
    except ValueError as exc:
        raise ParamError(f"bad value for {key}: {text!r}", key) from exc
    return text


def load_config(path=None, overrides=()):
    """Read a flat key/value config and apply `key=value` overrides."""
    cfg = dict(CONFIG_DEFAULTS)
    if path is not None:
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        body = Path(path).read_text()
        cp.read_string("[config]\n" + body)
        for key, val in cp["config"].items():
            cfg[key] = parse_value(key, val)
    for item in overrides:
        if "=" not in item:
            raise ParamError(f"override must be key=value, got {item!r}")
        key, val = item.split("=", 1)
        cfg[key.strip()] = parse_value(key.strip(), val)
    return cfg


def params_from_config(cfg, extra_prices=()):
    if not cfg.get("theta"):
        raise ParamError("config needs theta", "theta")
    return make_params(cfg["theta"], cfg.get("adoption_costs"), cfg["r_b"], cfg["r_s"],
                       cfg["eps"], cfg["nu"], cfg["grid_mode"], cfg["mu_mode"], extra_prices)
