"""Basic test functions B1-B9 and the shifted/rotated composite suite F1-F11.

All evaluators are vectorized over leading axes: ``x`` may be a single point of
shape ``(n,)`` or a batch of shape ``(N, n)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import Objective

BASIC_IDS = tuple(f"B{k}" for k in range(1, 10))
COMPOSITE_IDS = tuple(f"F{k}" for k in range(1, 12))
ALL_IDS = BASIC_IDS + COMPOSITE_IDS

GROUP_WEIGHT = 1e6


class BenchmarkConfigError(ValueError):
    pass


# -- basic functions -------------------------------------------------------


def sphere(x):
    x = np.asarray(x, dtype=float)
    return np.sum(x**2, axis=-1)


def elliptic(x):
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n == 1:
        weights = np.ones(1)
    else:
        weights = (1e6) ** (np.arange(n) / (n - 1))
    return np.sum(weights * x**2, axis=-1)


def schwefel_1_2(x):
    x = np.asarray(x, dtype=float)
    return np.sum(np.cumsum(x, axis=-1) ** 2, axis=-1)


def rosenbrock(x):
    x = np.asarray(x, dtype=float)
    head, tail = x[..., :-1], x[..., 1:]
    return np.sum(100.0 * (head**2 - tail) ** 2 + (head - 1.0) ** 2, axis=-1)


def rastrigin(x):
    x = np.asarray(x, dtype=float)
    return np.sum(x**2 - 10.0 * np.cos(2.0 * np.pi * x) + 10.0, axis=-1)


def ackley(x, form: str = "printed"):
    """Ackley's function.

    ``form="printed"`` puts the 1/n factor outside the square root,
    ``-20 exp(-0.2 (1/n) sqrt(sum x^2))``; ``form="standard"`` uses the usual
    ``sqrt((1/n) sum x^2)``. Both vanish at the origin.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    norm = np.sqrt(np.sum(x**2, axis=-1))
    if form == "printed":
        radial = norm / n
    elif form == "standard":
        radial = norm / np.sqrt(n)
    else:
        raise ValueError(f"unknown Ackley form {form!r}")
    cos_term = np.mean(np.cos(2.0 * np.pi * x), axis=-1)
    return -20.0 * np.exp(-0.2 * radial) - np.exp(cos_term) + 20.0 + np.e


_BASE: dict[str, Callable] = {
    "B1": sphere,
    "B2": elliptic,
    "B3": elliptic,
    "B4": schwefel_1_2,
    "B5": rosenbrock,
    "B6": rastrigin,
    "B7": rastrigin,
    "B8": ackley,
    "B9": ackley,
}
ROTATED_BASIC = {"B3", "B7", "B9"}


def eval_basic(fid: str, x, M=None, ackley_form: str = "printed"):
    """Evaluate basic function ``fid`` at ``x``; rotated ids use ``z = x @ M``."""
    if fid not in _BASE:
        raise KeyError(f"unknown basic function {fid!r}")
    x = np.asarray(x, dtype=float)
    if M is not None:
        x = x @ np.asarray(M, dtype=float)
    if fid in ("B8", "B9"):
        return ackley(x, ackley_form)
    return _BASE[fid](x)


# -- instances -------------------------------------------------------------

_BOX = {
    "sphere": 100.0,
    "elliptic": 100.0,
    "schwefel": 100.0,
    "rosenbrock": 100.0,
    "rastrigin": 5.0,
    "ackley": 32.0,
}
_FAMILY = {
    "B1": "sphere", "B2": "elliptic", "B3": "elliptic", "B4": "schwefel",
    "B5": "rosenbrock", "B6": "rastrigin", "B7": "rastrigin", "B8": "ackley",
    "B9": "ackley",
    "F1": "elliptic", "F2": "rastrigin", "F3": "ackley", "F4": "elliptic",
    "F5": "rastrigin", "F6": "schwefel", "F7": "rosenbrock", "F8": "rastrigin",
    "F9": "schwefel", "F10": "schwefel", "F11": "schwefel",
}
# composites that carry an m x m rotation
_ROTATED_COMPOSITE = {"F4", "F5", "F8"}


def default_group_size(n: int) -> int:
    return max(1, min(10, n // 4))


def gen_rotation(m: int, seed: int) -> np.ndarray:
    """Haar-distributed m x m orthogonal matrix from the QR factors of a Gaussian draw."""
    if m < 1:
        raise ValueError("rotation size must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0x5107,)))
    q, r = np.linalg.qr(rng.standard_normal((m, m)))
    return q * np.sign(np.diag(r))


@dataclass(frozen=True)
class GroupLayout:
    """Index slices (already mapped through the permutation) of rotated groups and remainder."""

    groups: tuple[np.ndarray, ...]
    remainder: np.ndarray | None
    remainder_repeats: int = 1


@dataclass
class BenchmarkInstance:
    function_id: str
    n: int
    m: int
    seed: int
    shift: np.ndarray
    rotation: np.ndarray | None
    permutation: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    ackley_form: str = "printed"
    layout: GroupLayout | None = field(default=None, repr=False)

    def __post_init__(self):
        self.layout = group_layout(self.function_id, self.n, self.m, self.permutation)

    def __call__(self, x):
        return eval_instance(self, x)

    def to_json(self) -> str:
        doc = {
            "function_id": self.function_id,
            "n": self.n,
            "m": self.m,
            "seed": self.seed,
            "shift": [float(v) for v in self.shift],
            "rotation_size": None if self.rotation is None else int(self.rotation.shape[0]),
            "rotation": None if self.rotation is None else [float(v) for v in self.rotation.ravel()],
            "permutation": [int(v) for v in self.permutation],
            "lower": [float(v) for v in self.lower],
            "upper": [float(v) for v in self.upper],
            "ackley_form": self.ackley_form,
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "BenchmarkInstance":
        doc = json.loads(text)
        rot = doc.get("rotation")
        if rot is not None:
            k = doc["rotation_size"]
            rot = np.asarray(rot, dtype=float).reshape(k, k)
        return cls(
            function_id=doc["function_id"],
            n=int(doc["n"]),
            m=int(doc["m"]),
            seed=int(doc["seed"]),
            shift=np.asarray(doc["shift"], dtype=float),
            rotation=rot,
            permutation=np.asarray(doc["permutation"], dtype=int),
            lower=np.asarray(doc["lower"], dtype=float),
            upper=np.asarray(doc["upper"], dtype=float),
            ackley_form=doc.get("ackley_form", "printed"),
        )

    def objective(self) -> Objective:
        opt = known_optimum(self)
        x_opt, f_opt = (None, 0.0) if opt is None else opt
        return Objective(
            fn=self.__call__,
            lower=self.lower,
            upper=self.upper,
            x_opt=x_opt,
            f_opt=f_opt,
            name=self.function_id,
            vectorized=True,
        )


def group_layout(fid: str, n: int, m: int, perm: np.ndarray) -> GroupLayout | None:
    if fid in ("F4", "F5", "F6", "F7"):
        return GroupLayout(groups=(perm[:m],), remainder=perm[m:])
    if fid in ("F8", "F9"):
        k = n // (2 * m)
        groups = tuple(perm[i * m:(i + 1) * m] for i in range(k))
        # the remainder term sits inside the group sum as printed
        return GroupLayout(groups=groups, remainder=perm[n // 2:], remainder_repeats=k)
    if fid == "F10":
        groups = tuple(perm[i * m:(i + 1) * m] for i in range(n // m))
        return GroupLayout(groups=groups, remainder=None)
    return None


def _check_layout(fid: str, n: int, m: int) -> None:
    if n < 1:
        raise BenchmarkConfigError(f"{fid}: dimension n={n} must be >= 1")
    if fid.startswith("B") or fid in ("F1", "F2", "F3", "F11"):
        return
    if m < 1 or m > n:
        raise BenchmarkConfigError(f"{fid}: group size m={m} must satisfy 1 <= m <= n={n}")
    if fid == "F7" and m < 2:
        raise BenchmarkConfigError("F7: Rosenbrock group needs m >= 2")
    if fid in ("F8", "F9") and n % (2 * m) != 0:
        raise BenchmarkConfigError(f"{fid}: n={n} must be divisible by 2m={2 * m}")
    if fid == "F10" and n % m != 0:
        raise BenchmarkConfigError(f"{fid}: n={n} must be divisible by m={m}")


def make_instance(
    fid: str,
    n: int,
    m: int | None = None,
    seed: int = 0,
    shift: bool | None = None,
    ackley_form: str = "printed",
) -> BenchmarkInstance:
    """Build a reproducible benchmark instance.

    Composite functions F1-F11 are always shifted. Basic functions B1-B9 are
    unshifted unless ``shift=True``.
    """
    if fid not in ALL_IDS:
        raise BenchmarkConfigError(f"unknown function id {fid!r}")
    if m is None:
        m = default_group_size(n)
    _check_layout(fid, n, m)
    half = _BOX[_FAMILY[fid]]
    lower = np.full(n, -half)
    upper = np.full(n, half)

    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xB3,)))
    do_shift = fid.startswith("F") if shift is None else shift
    # draw from the central half of the box so the optimum never sits on a bound
    o = rng.uniform(-half / 2, half / 2, size=n) if do_shift else np.zeros(n)
    perm = rng.permutation(n) if fid.startswith("F") else np.arange(n)

    rotation = None
    if fid in ROTATED_BASIC:
        rotation = gen_rotation(n, seed)
    elif fid in _ROTATED_COMPOSITE:
        rotation = gen_rotation(m, seed)
    return BenchmarkInstance(fid, n, m, seed, o, rotation, perm, lower, upper, ackley_form)


def eval_composite(inst: BenchmarkInstance, x):
    x = np.asarray(x, dtype=float)
    fid = inst.function_id
    z = x - inst.shift
    if fid.startswith("B"):
        return eval_basic(fid, z, inst.rotation, inst.ackley_form)
    if fid == "F1":
        return elliptic(z)
    if fid == "F2":
        return rastrigin(z)
    if fid == "F3":
        return ackley(z, inst.ackley_form)
    if fid == "F11":
        return schwefel_1_2(z)

    layout = inst.layout
    M = inst.rotation
    if fid in ("F4", "F8"):
        head, tail = lambda v: elliptic(v @ M), elliptic
        if fid == "F8":
            head, tail = lambda v: rastrigin(v @ M), rastrigin
    elif fid == "F5":
        head, tail = lambda v: rastrigin(v @ M), rastrigin
    elif fid in ("F6", "F9", "F10"):
        head, tail = schwefel_1_2, sphere
    else:  # F7
        head, tail = rosenbrock, sphere

    if fid == "F10":
        return sum(schwefel_1_2(z[..., g]) for g in layout.groups)
    total = sum(head(z[..., g]) * GROUP_WEIGHT for g in layout.groups)
    total = total + layout.remainder_repeats * tail(z[..., layout.remainder])
    return total


def eval_instance(inst: BenchmarkInstance, x):
    return eval_composite(inst, x)


def known_optimum(inst: BenchmarkInstance):
    """``(x*, f*)`` when the optimizer location is known, else ``None`` (F7)."""
    fid = inst.function_id
    if fid == "F7":
        return None
    if fid == "B5":
        return inst.shift + 1.0, 0.0
    return inst.shift.copy(), 0.0


def describe() -> list[tuple[str, str, float]]:
    """(id, family, box half-width) for every available function."""
    return [(fid, _FAMILY[fid], _BOX[_FAMILY[fid]]) for fid in ALL_IDS]
