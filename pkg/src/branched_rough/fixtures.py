"""Built-in sample paths, one-forms and scenario configs.

Scenario configs are plain dicts (usually loaded from JSON):

    {"path": {"generator": "smooth", "d": 2, "n": 1024, "params": {...}}
             | {"csv": "samples.csv"},
     "p": 2.0, "gamma": 2.5,
     "lift": {"kind": "canonical"}
             | {"kind": "ito", "perturbation": [{"i": 1, "j": 1, "rate": -0.5}]},
     "one_form": {...}, "interval": [s, t], "refine": 2, "seed": 0}

Ito perturbations are linear in time, ``c_ij(t) = rate * (t - t_0)``.
"""

from __future__ import annotations

from fractions import Fraction
from math import floor
from pathlib import Path

import numpy as np

from .forest_algebra import MAX_DEGREE
from .one_form import Polynomial, PolynomialOneForm
from .rough_path import BranchedRoughPath, canonical_lift, ito_like_lift, read_csv


class ConfigError(ValueError):
    """Invalid or inconsistent scenario configuration."""


def grid(n: int, T: float = 1.0) -> np.ndarray:
    if n < 1:
        raise ConfigError("a path needs at least one step")
    return np.linspace(0.0, T, n + 1)


def linear_path(t: np.ndarray, v) -> np.ndarray:
    return np.outer(t - t[0], np.asarray(v, dtype=float))


def monomial_path(t: np.ndarray, d: int) -> np.ndarray:
    """Coordinates ``t, t^2, ..., t^d``."""
    return np.stack([t**k for k in range(1, d + 1)], axis=1)


def zigzag_path(t: np.ndarray, d: int, teeth: int = 1) -> np.ndarray:
    """Triangle waves between 0 and 1; coordinate ``k`` has ``k * teeth`` teeth."""
    T = t[-1] - t[0]
    cols = []
    for k in range(1, d + 1):
        phase = (t - t[0]) / T * k * teeth
        cols.append(1.0 - np.abs(2.0 * (phase - np.floor(phase)) - 1.0))
    return np.stack(cols, axis=1)


def smooth_path(t: np.ndarray, d: int, seed: int = 0, modes: int = 3, amplitude: float = 1.0) -> np.ndarray:
    """Seeded trigonometric polynomial starting at the origin, mode ``m`` damped by ``1/m^2``."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(d, modes))
    b = rng.normal(size=(d, modes))
    T = t[-1] - t[0]
    s = 2 * np.pi * (t - t[0]) / T
    out = np.zeros((len(t), d))
    for m in range(1, modes + 1):
        out += (np.sin(m * s)[:, None] * a[:, m - 1] + (np.cos(m * s) - 1)[:, None] * b[:, m - 1]) / m**2
    return amplitude * out


GENERATORS = ("linear", "monomial", "zigzag", "smooth")


def generate(path_cfg: dict, seed: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    name = path_cfg.get("generator")
    if name not in GENERATORS:
        raise ConfigError(f"unknown path generator {name!r}; choose from {', '.join(GENERATORS)}")
    d = int(path_cfg.get("d", 1))
    t = grid(int(path_cfg.get("n", 256)), float(path_cfg.get("T", 1.0)))
    params = dict(path_cfg.get("params", {}))
    if name == "linear":
        x = linear_path(t, params.get("v", [1.0] * d))
        if x.shape[1] != d:
            raise ConfigError("linear path velocity must have d entries")
    elif name == "monomial":
        x = monomial_path(t, d)
    elif name == "zigzag":
        x = zigzag_path(t, d, int(params.get("teeth", 1)))
    else:
        s = params.get("seed", seed if seed is not None else 0)
        x = smooth_path(t, d, int(s), int(params.get("modes", 3)), float(params.get("amplitude", 1.0)))
    x = x + np.asarray(params.get("start", np.zeros(d)), dtype=float)
    return t, x


def load_samples(path_cfg: dict, seed: int | None = None, base_dir: Path | None = None) -> tuple[np.ndarray, np.ndarray]:
    if "csv" in path_cfg:
        path = Path(path_cfg["csv"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return read_csv(path)
    if "generator" in path_cfg:
        return generate(path_cfg, seed)
    raise ConfigError("path config needs 'csv' or 'generator'")


def check_exponents(p: float, gamma: float | None = None):
    if p < 1:
        raise ConfigError(f"p must be >= 1, got {p}")
    if floor(p) > MAX_DEGREE:
        raise ConfigError(f"floor(p) must be at most {MAX_DEGREE}")
    if gamma is not None and gamma <= p:
        raise ConfigError(f"gamma must exceed p (gamma={gamma}, p={p})")


def build_path(cfg: dict, seed: int | None = None, base_dir: Path | None = None, path_key: str = "path", lift_key: str = "lift") -> BranchedRoughPath:
    if path_key not in cfg:
        raise ConfigError(f"config is missing '{path_key}'")
    p = float(cfg.get("p", 1.0))
    check_exponents(p)
    t, x = load_samples(cfg[path_key], seed, base_dir)
    lift = cfg.get(lift_key, {"kind": "canonical"})
    kind = lift.get("kind", "canonical")
    if kind == "canonical":
        return canonical_lift(t, x, p=p)
    if kind == "ito":
        pert = {}
        for term in lift.get("perturbation", []):
            key = (int(term["i"]), int(term["j"]))
            pert[key] = pert.get(key, 0.0) + float(term["rate"]) * (t - t[0])
        try:
            return ito_like_lift(t, x, pert, p=p)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown lift kind {kind!r}")


def build_one_form(cfg: dict) -> PolynomialOneForm:
    if "one_form" not in cfg:
        raise ConfigError("config is missing 'one_form'")
    obj = dict(cfg["one_form"])
    obj.setdefault("gamma", cfg.get("gamma"))
    if obj["gamma"] is None:
        raise ConfigError("gamma must be given in the config or the one-form")
    try:
        f = PolynomialOneForm.from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad one-form: {exc}") from None
    check_exponents(float(cfg.get("p", 1.0)), f.gamma)
    return f


# ---------------------------------------------------------------------------
# named one-forms used by demos, tests and the verify command


def identity_form(d: int, gamma: float) -> PolynomialOneForm:
    """``f_i(x) = x_i e_i`` (``e = d``)."""
    comps = [[Polynomial.variable(d, i) if k == i else Polynomial.zero(d) for k in range(1, d + 1)] for i in range(1, d + 1)]
    return PolynomialOneForm(d, d, gamma, comps)


def constant_form(d: int, e: int, gamma: float, c: float = 1.0) -> PolynomialOneForm:
    return PolynomialOneForm(d, e, gamma, [[Polynomial.constant(d, c) for _ in range(e)] for _ in range(d)])


def rotation_form(gamma: float) -> PolynomialOneForm:
    """A quadratic two-dimensional one-form with non-commuting components."""
    P = Polynomial
    return PolynomialOneForm(
        2,
        2,
        gamma,
        [
            [P(2, {(0, 0): 1, (0, 1): -1, (2, 0): "1/2"}), P(2, {(1, 0): 1})],
            [P(2, {(0, 1): 1, (1, 1): "1/3"}), P(2, {(0, 0): "1/2", (1, 0): -1})],
        ],
    )


def random_polynomial_form(rng: np.random.Generator, d: int, e: int, gamma: float, max_degree: int = 3, terms: int = 4) -> PolynomialOneForm:
    """Random polynomial one-form with small rational coefficients."""
    comps = []
    for _ in range(d):
        row = []
        for _ in range(e):
            poly = {}
            for _ in range(terms):
                mono = [0] * d
                for _ in range(int(rng.integers(0, max_degree + 1))):
                    mono[int(rng.integers(0, d))] += 1
                poly[tuple(mono)] = poly.get(tuple(mono), 0) + int(rng.integers(-5, 6)) * Fraction(1, int(rng.integers(1, 4)))
            row.append(Polynomial(d, poly))
        comps.append(row)
    return PolynomialOneForm(d, e, gamma, comps)
