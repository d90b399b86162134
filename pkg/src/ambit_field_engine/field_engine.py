"""Realizations of the Levy basis on a window and evaluation of the ambit field."""

import json
import logging
from functools import lru_cache
from pathlib import Path

import numpy as np

from ambit_field_engine.ambit_geometry import as_ambit_set, integrate_over
from ambit_field_engine.exceptions import InvalidParameterError, UnsupportedLawError, WindowRangeError
from ambit_field_engine.kernels import eval_F
from ambit_field_engine.levy_basis import is_exact_law, measure_integral, sample_cells, truncated_first_moment
from ambit_field_engine.objects import (
    AmbitSet,
    AtomRealization,
    CharacteristicTriplet,
    CompoundPoisson,
    ConstantVolatility,
    GHDensity,
    GridRealization,
    IndependentGridVolatility,
    KernelSpec,
    LevyRealization,
    StableDensity,
    VolatilityField,
    VolatilitySpec,
    Window,
)
from ambit_field_engine.utils import sha256_hex

logger = logging.getLogger(__name__)

CELLS_PER_RADIUS = 10
MARGIN_CELLS = 5


def default_cell_size(r_min: float) -> float:
    """``h = r_min / 10`` so that the r-collar spans at least ten cells."""
    return r_min / CELLS_PER_RADIUS


def window_for(ambit_set, points, r_max: float, h: float) -> Window:
    """Window holding ``R + p`` and every circle of radius ``r_max`` around the points."""
    ambit_set = as_ambit_set(ambit_set)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    margin = ambit_set.radius + r_max + MARGIN_CELLS * h
    bbox = (*pts.min(axis=0).tolist(), *pts.max(axis=0).tolist())
    return Window.around(bbox, margin)


def realize(
    triplet: CharacteristicTriplet,
    window: Window,
    h: float,
    rng: np.random.Generator,
    allow_approximation: bool = False,
    atoms: bool = True,
) -> LevyRealization:
    """Sample the basis on ``window``.

    Compound Poisson bases without a Gaussian part are realized exactly as
    atoms plus a drift density, and deterministic bases as the drift density
    alone; every other law is drawn cell by cell. ``atoms=False`` forces the
    cell path.

    Raises
    ------
    UnsupportedLawError
        For GH bases when ``allow_approximation`` is False
    """
    measure = triplet.levy_measure
    if atoms and triplet.is_deterministic:
        logger.debug("Deterministic basis: drift density only")
        return AtomRealization(window, np.zeros((0, 2)), np.zeros(0), triplet.gamma, triplet)
    if atoms and isinstance(measure, CompoundPoisson) and triplet.b == 0:
        count = int(rng.poisson(measure.rate * window.area))
        positions = np.column_stack(
            (rng.uniform(window.x0, window.x1, count), rng.uniform(window.y0, window.y1, count))
        )
        weights = measure.jumps.sample(rng, count)
        drift = triplet.gamma - truncated_first_moment(measure)
        logger.debug(f"Realized {count} atoms on a window of area {window.area:.4g}")
        return AtomRealization(window, positions, weights, drift, triplet)

    if not h > 0:
        raise InvalidParameterError(f"Cell size must be positive, got {h}")
    if isinstance(measure, GHDensity) and allow_approximation:
        logger.warning("GH cells are drawn with the small-jump Gaussian substitution")
    values = sample_cells(triplet, h * h, window.shape(h), rng, allow_approximation)
    return GridRealization(window, h, values, triplet, approximate=not is_exact_law(triplet))


def realize_volatility(spec: VolatilitySpec, window: Window, h: float, rng: np.random.Generator) -> VolatilityField:
    """Sample the volatility on its own stream, independent of the basis."""
    if isinstance(spec, IndependentGridVolatility):
        values = rng.uniform(spec.low, spec.high, size=window.shape(h))
        return VolatilityField(spec, window, h, values)
    return VolatilityField(spec)


@lru_cache(maxsize=64)
def _drift_integral(kernel: KernelSpec, ambit_set: AmbitSet) -> np.ndarray:
    """``int_R F(-q) dq``."""
    return integrate_over(ambit_set, lambda q: eval_F(kernel, -q))


def _require_window(realization: LevyRealization, ambit_set: AmbitSet, p: np.ndarray):
    x0, y0, x1, y1 = ambit_set.bbox
    bbox = (x0 + p[0], y0 + p[1], x1 + p[0], y1 + p[1])
    if not realization.window.covers(bbox):
        raise WindowRangeError(f"R + {p.tolist()} spans {bbox}, outside the window {realization.window}")


def field_sum(realization: LevyRealization, ambit_set: AmbitSet, p: np.ndarray, integrand, vol=None):
    """``sum integrand(p - q) V(q) L(q)`` over the atoms or cell centers ``q`` in ``R + p``, drift excluded."""
    _require_window(realization, ambit_set, p)
    if isinstance(realization, AtomRealization):
        rel = realization.positions - p
        inside = ambit_set.contains(rel).reshape(-1) if rel.size else np.zeros(0, dtype=bool)
        weights = realization.weights[inside]
        if vol is not None:
            weights = weights * vol.at(realization.positions[inside])
        return np.asarray(integrand(-rel[inside])).T @ weights
    x0, y0, x1, y1 = ambit_set.bbox
    rows, cols = realization.index_range((x0 + p[0], y0 + p[1], x1 + p[0], y1 + p[1]))
    centers = realization.centers(rows, cols)
    values = realization.values[rows, cols].reshape(-1)
    inside = ambit_set.contains(centers - p).reshape(-1)
    weights = values[inside]
    if vol is not None:
        weights = weights * vol.at(centers[inside])
    return np.asarray(integrand(p - centers[inside])).T @ weights


def _drift_term(realization, kernel, ambit_set, p, vol: VolatilityField | None) -> np.ndarray:
    if not isinstance(realization, AtomRealization) or realization.drift == 0.0:
        return np.zeros(2)
    if vol is None or isinstance(vol.spec, ConstantVolatility):
        scale = 1.0 if vol is None else vol.spec.c
        return realization.drift * scale * _drift_integral(kernel, ambit_set)
    return realization.drift * integrate_over(ambit_set, lambda q: eval_F(kernel, -q) * vol.at(q + p)[:, None])


def eval_field(realization: LevyRealization, kernel: KernelSpec, ambit_set, p) -> np.ndarray:
    """``X(p) = int_{R+p} F(p - q) L(dq)`` at one point ``(2,)`` or many ``(n, 2)``.

    Grid realizations use the cell-center membership rule; atom realizations
    are exact up to the drift quadrature.

    Raises
    ------
    WindowRangeError
        If ``R + p`` leaves the realization window
    """
    return eval_field_modulated(realization, kernel, ambit_set, None, p)


def eval_field_modulated(
    realization: LevyRealization,
    kernel: KernelSpec,
    ambit_set,
    vol: VolatilityField | None,
    p,
) -> np.ndarray:
    """``int_{R+p} F(p - q) V(q) L(dq)``; ``vol=None`` means ``V = 1``."""
    ambit_set = as_ambit_set(ambit_set)
    pts = np.asarray(p, dtype=float)
    flat = pts.reshape(-1, 2)
    integrand = lambda y: eval_F(kernel, y)
    out = np.empty((flat.shape[0], 2))
    for index, point in enumerate(flat):
        out[index] = field_sum(realization, ambit_set, point, integrand, vol)
        out[index] += _drift_term(realization, kernel, ambit_set, point, vol)
    return out[0] if pts.ndim == 1 else out


def second_moment_of_jumps(triplet: CharacteristicTriplet) -> float:
    """``int x^2 nu(dx)``, infinite for stable measures."""
    measure = triplet.levy_measure
    if measure is None:
        return 0.0
    if isinstance(measure, StableDensity):
        return float("inf")
    return measure_integral(measure, lambda x: x * x)


def exact_field_variance(triplet: CharacteristicTriplet, kernel: KernelSpec, ambit_set) -> np.ndarray:
    """Covariance ``(b^2 + int x^2 nu) int_R F(-q) F(-q)^T dq`` of ``X(p)``."""
    ambit_set = as_ambit_set(ambit_set)
    outer = integrate_over(
        ambit_set, lambda q: np.einsum("ni,nj->nij", eval_F(kernel, -q), eval_F(kernel, -q)).reshape(-1, 4)
    ).reshape(2, 2)
    return (triplet.b**2 + second_moment_of_jumps(triplet)) * outer


def save_realization(path: Path | str, realization: LevyRealization) -> Path:
    """Write an ``.npz`` dump: a JSON header (window, h, triplet and its hash) plus the payload."""
    _path = Path(path)
    _path.parent.mkdir(parents=True, exist_ok=True)
    triplet = realization.triplet.to_dict()
    header = {**realization.header(), "triplet": triplet, "triplet_sha256": sha256_hex(triplet)}
    arrays = (
        {"values": np.ascontiguousarray(realization.values)}
        if isinstance(realization, GridRealization)
        else {"positions": realization.positions, "weights": realization.weights}
    )
    with _path.open("wb") as handle:
        np.savez(handle, header=np.array(json.dumps(header, sort_keys=True)), **arrays)
    logger.info(f"Saved realization to {_path}")
    return _path


def load_realization(path: Path | str) -> LevyRealization:
    """Read a dump written by :func:`save_realization`, checking the triplet hash."""
    with np.load(Path(path), allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        triplet_payload = header["triplet"]
        if sha256_hex(triplet_payload) != header["triplet_sha256"]:
            raise InvalidParameterError(f"Triplet hash mismatch in {path}")
        triplet = CharacteristicTriplet.from_dict(triplet_payload)
        window = Window(**header["window"])
        if header["type"] == "grid":
            return GridRealization(window, float(header["h"]), np.array(data["values"]), triplet, header["approximate"])
        if header["type"] == "atoms":
            return AtomRealization(window, np.array(data["positions"]), np.array(data["weights"]), header["drift"], triplet)
    raise UnsupportedLawError(f"Unknown realization type {header['type']!r}")
