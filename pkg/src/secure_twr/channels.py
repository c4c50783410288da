"""Six-matrix channel model of the A <-> R <-> B system.

Link naming follows the transmitter -> receiver direction:

    h_a : A -> R  (N_R x N_A)      g_a : R -> A  (N_A x N_R)
    h_b : B -> R  (N_R x N_B)      g_b : R -> B  (N_B x N_R)
    t_a : A -> B  (N_B x N_A)      t_b : B -> A  (N_A x N_B)

Noise at every receiver is CN(0, I), so all powers are SNR-like numbers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ChannelParseError, DimensionError

__all__ = [
    "Dims",
    "ChannelSet",
    "PowerBudget",
    "db_to_linear",
    "linear_to_db",
    "sample_channels",
    "paper_fixture",
    "save_channels",
    "load_channels",
    "channels_to_dict",
    "channels_from_dict",
]

MATRIX_NAMES = ("h_a", "h_b", "g_a", "g_b", "t_a", "t_b")
RECIPROCITY_TOL = 1e-12


def db_to_linear(db: float) -> float:
    return float(10.0 ** (db / 10.0))


def linear_to_db(p: float) -> float:
    return float(10.0 * np.log10(p)) if p > 0 else -np.inf


@dataclass(frozen=True)
class Dims:
    n_a: int
    n_b: int
    n_r: int

    def __post_init__(self):
        for name in ("n_a", "n_b", "n_r"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DimensionError(f"{name} must be a positive integer, got {v!r}")

    def swapped(self) -> "Dims":
        return Dims(self.n_b, self.n_a, self.n_r)

    def expected_shapes(self) -> dict[str, tuple[int, int]]:
        a, b, r = self.n_a, self.n_b, self.n_r
        return {
            "h_a": (r, a),
            "h_b": (r, b),
            "g_a": (a, r),
            "g_b": (b, r),
            "t_a": (b, a),
            "t_b": (a, b),
        }


@dataclass(frozen=True)
class PowerBudget:
    """Per-node transmit power limits in linear scale."""

    p_a: float
    p_b: float
    p_r: float

    def __post_init__(self):
        for name in ("p_a", "p_b", "p_r"):
            v = getattr(self, name)
            if not v >= 0:
                raise ValueError(f"{name} must be >= 0, got {v!r}")

    @classmethod
    def from_db(cls, p_a_db: float, p_b_db: float, p_r_db: float) -> "PowerBudget":
        return cls(db_to_linear(p_a_db), db_to_linear(p_b_db), db_to_linear(p_r_db))

    def swapped(self) -> "PowerBudget":
        return PowerBudget(self.p_b, self.p_a, self.p_r)

    def scaled(self, factor: float) -> "PowerBudget":
        return PowerBudget(self.p_a * factor, self.p_b * factor, self.p_r * factor)

    def energy_normalized_3p(self) -> "PowerBudget":
        """Budget for the three-phase scheme that matches the energy of this two-slot budget.

        Three slots at ``3/2`` the power use the same energy per exchange
        as two slots at the original power.
        """
        return self.scaled(1.5)


@dataclass(frozen=True, eq=False)
class ChannelSet:
    dims: Dims
    h_a: np.ndarray
    h_b: np.ndarray
    g_a: np.ndarray
    g_b: np.ndarray
    t_a: np.ndarray
    t_b: np.ndarray
    reciprocal: bool = field(default=False)

    def __post_init__(self):
        shapes = self.dims.expected_shapes()
        for name in MATRIX_NAMES:
            m = np.array(getattr(self, name), dtype=complex)
            if m.shape != shapes[name]:
                raise DimensionError(
                    f"{name} has shape {m.shape}, expected {shapes[name]} for {self.dims}"
                )
            if not np.all(np.isfinite(m)):
                raise DimensionError(f"{name} has non-finite entries")
            m.setflags(write=False)
            object.__setattr__(self, name, m)
        if self.reciprocal:
            pairs = (("t_a", "t_b"), ("h_a", "g_a"), ("h_b", "g_b"))
            for x, y in pairs:
                gap = np.max(np.abs(getattr(self, x) - getattr(self, y).T))
                if gap > RECIPROCITY_TOL:
                    raise DimensionError(f"reciprocal set violates {x} = {y}^T (gap {gap:.3g})")

    @classmethod
    def from_forward(cls, h_a, h_b, t_a) -> "ChannelSet":
        """Build a reciprocal set from the forward links alone."""
        h_a = np.asarray(h_a, dtype=complex)
        h_b = np.asarray(h_b, dtype=complex)
        t_a = np.asarray(t_a, dtype=complex)
        dims = Dims(h_a.shape[1], h_b.shape[1], h_a.shape[0])
        return cls(dims, h_a, h_b, h_a.T, h_b.T, t_a, t_a.T, reciprocal=True)

    def swapped(self) -> "ChannelSet":
        """Relabel A <-> B."""
        return ChannelSet(
            self.dims.swapped(),
            self.h_b,
            self.h_a,
            self.g_b,
            self.g_a,
            self.t_b,
            self.t_a,
            self.reciprocal,
        )

    def __eq__(self, other):
        if not isinstance(other, ChannelSet):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.reciprocal == other.reciprocal
            and all(np.array_equal(getattr(self, n), getattr(other, n)) for n in MATRIX_NAMES)
        )

    __hash__ = None


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_channels(dims: Dims, seed, reciprocal: bool = True) -> ChannelSet:
    """Draw every independent entry i.i.d. CN(0, 1).

    ``seed`` may be anything accepted by ``numpy.random.default_rng``.
    """
    rng = np.random.default_rng(seed)
    shapes = dims.expected_shapes()
    h_a = _cn(rng, shapes["h_a"])
    h_b = _cn(rng, shapes["h_b"])
    t_a = _cn(rng, shapes["t_a"])
    if reciprocal:
        return ChannelSet(dims, h_a, h_b, h_a.T, h_b.T, t_a, t_a.T, True)
    g_a = _cn(rng, shapes["g_a"])
    g_b = _cn(rng, shapes["g_b"])
    t_b = _cn(rng, shapes["t_b"])
    return ChannelSet(dims, h_a, h_b, g_a, g_b, t_a, t_b, False)


# Published 5x3 / 5x3 / 3x3 realization; smaller sets take the upper-left block.
_FIXTURE_H_A = np.array(
    [
        [0.2686 - 0.0965j, 0.1305 - 1.2373j, 0.6027 + 0.8313j],
        [0.9510 + 0.8678j, -0.4450 + 0.2224j, -0.4630 + 0.3531j],
        [0.4050 - 0.7642j, -0.6673 - 0.7447j, -0.0039 + 1.0646j],
        [-0.9971 + 0.2578j, -1.5888 - 0.9503j, -0.4514 - 0.2944j],
        [-1.1448 + 0.1069j, -0.5209 - 0.0569j, 0.1598 + 0.0048j],
    ]
)
_FIXTURE_H_B = np.array(
    [
        [0.3612 + 0.7099j, -0.0464 - 1.1249j, 0.6175 - 1.6643j],
        [0.6236 - 0.3490j, 0.2193 + 0.8722j, -0.8481 - 0.1791j],
        [-0.4814 - 0.3466j, 0.2838 + 0.3014j, -0.3683 + 1.6906j],
        [-0.2929 + 1.5306j, -0.2643 + 0.8701j, -1.6770 + 0.0192j],
        [-0.0722 + 0.1413j, 0.1504 + 0.9271j, 0.9011 - 0.3934j],
    ]
)
_FIXTURE_T_A = np.array(
    [
        [0.0538 + 1.3647j, 1.1100 - 0.5711j, -0.5226 - 0.0653j],
        [0.9241 - 0.9370j, -0.5684 - 1.1719j, -0.3993 - 0.6427j],
        [-0.0592 - 1.2997j, -0.9250 + 0.1194j, 0.1469 + 0.4010j],
    ]
)


def paper_fixture(dims: Dims) -> ChannelSet:
    """The fixed published realization, sliced to ``dims``, with reciprocity."""
    if dims.n_a > 3 or dims.n_b > 3 or dims.n_r > 5:
        raise DimensionError(f"fixture supports n_a <= 3, n_b <= 3, n_r <= 5; got {dims}")
    h_a = _FIXTURE_H_A[: dims.n_r, : dims.n_a]
    h_b = _FIXTURE_H_B[: dims.n_r, : dims.n_b]
    t_a = _FIXTURE_T_A[: dims.n_b, : dims.n_a]
    return ChannelSet.from_forward(h_a, h_b, t_a)


# --- serialization -------------------------------------------------------


def _encode(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def channels_to_dict(ch: ChannelSet) -> dict:
    d = {
        "dims": {"n_a": ch.dims.n_a, "n_b": ch.dims.n_b, "n_r": ch.dims.n_r},
        "reciprocal": bool(ch.reciprocal),
    }
    for name in MATRIX_NAMES:
        d[name] = _encode(getattr(ch, name))
    return d


def _decode(name: str, raw, shape: tuple[int, int]) -> np.ndarray:
    if not isinstance(raw, list):
        raise ChannelParseError(f"{name}: expected a list of rows")
    if len(raw) != shape[0]:
        raise DimensionError(f"{name}: has {len(raw)} rows, expected {shape[0]}")
    out = np.empty(shape, dtype=complex)
    for i, row in enumerate(raw):
        if not isinstance(row, list):
            raise ChannelParseError(f"{name}[{i}]: expected a list of entries")
        if len(row) != shape[1]:
            raise DimensionError(f"{name}[{i}]: has {len(row)} columns, expected {shape[1]}")
        for j, entry in enumerate(row):
            where = f"{name}[{i}][{j}]"
            if not (isinstance(entry, list) and len(entry) == 2):
                raise ChannelParseError(f"{where}: expected a [re, im] pair, got {entry!r}")
            re, im = entry
            for part in (re, im):
                if isinstance(part, bool) or not isinstance(part, (int, float)):
                    raise ChannelParseError(f"{where}: non-numeric value {part!r}")
            out[i, j] = complex(re, im)
    return out


def channels_from_dict(d: dict) -> ChannelSet:
    try:
        raw_dims = d["dims"]
        dims = Dims(int(raw_dims["n_a"]), int(raw_dims["n_b"]), int(raw_dims["n_r"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ChannelParseError(f"dims: malformed ({exc})") from exc
    recip = d.get("reciprocal", False)
    if not isinstance(recip, bool):
        raise ChannelParseError(f"reciprocal: expected bool, got {recip!r}")
    shapes = dims.expected_shapes()
    mats = {}
    for name in MATRIX_NAMES:
        if name not in d:
            raise ChannelParseError(f"{name}: missing")
        mats[name] = _decode(name, d[name], shapes[name])
    return ChannelSet(dims, reciprocal=recip, **mats)


def save_channels(ch: ChannelSet, path) -> None:
    Path(path).write_text(json.dumps(channels_to_dict(ch), indent=1))


def load_channels(path) -> ChannelSet:
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChannelParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(d, dict):
        raise ChannelParseError("top level must be a JSON object")
    return channels_from_dict(d)
