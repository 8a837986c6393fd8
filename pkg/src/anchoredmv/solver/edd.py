"""Euclidean distance degrees by counting complex critical points."""
from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ..projective import SpatialLine
from ..reduction import ViewChart, anchored_line_problem, anchored_point_problem
from .homotopy import TrackerConfig
from .systems import (
    build_anchored_line_system,
    build_anchored_point_system,
    build_point_mv_system,
    solve_critical,
)

VARIETIES = ("anchored-point", "anchored-line", "point-mv")

# generic counts, used only for reporting expectations
EXPECTED = {
    "anchored-point": lambda m: 3 * m - 2,
    "anchored-line": lambda m: (9 * m * m - 19 * m + 6) // 2,
    "point-mv": lambda m: (9 * m**3 - 21 * m**2 + 16 * m - 8) // 2,
}


@dataclass
class EddStats:
    variety: str
    m: int
    counts: list
    modal: int
    agreement: float
    expected: int
    failures: int = 0
    seconds: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def matches(self) -> bool:
        return self.modal == self.expected


def _complex(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_system(variety: str, m: int, rng, reduced: bool = True):
    """Critical system of a random instance with generic complex image data."""
    cams = [rng.normal(size=(3, 4)) for _ in range(m)]
    if variety == "anchored-point":
        L = SpatialLine(rng.normal(size=(4, 2)))
        prob = anchored_point_problem(cams, L, _complex(rng, (m, 2)))
        return build_anchored_point_system(prob, reduced)
    if variety == "anchored-line":
        prob = anchored_line_problem(
            cams, rng.normal(size=4), _complex(rng, (m, 2)), [ViewChart.standard()] * m
        )
        return build_anchored_line_system(prob, reduced)
    if variety == "point-mv":
        return build_point_mv_system(cams, _complex(rng, (m, 2)))
    raise ValueError(f"unknown variety {variety!r}; choose from {VARIETIES}")


def count_edd(
    variety: str,
    m: int,
    trials: int = 20,
    seed: int | None = None,
    cfg: TrackerConfig | None = None,
    reduced: bool = True,
) -> EddStats:
    """Modal number of finite nonsingular critical points over random instances."""
    if variety not in VARIETIES:
        raise ValueError(f"unknown variety {variety!r}; choose from {VARIETIES}")
    if m < 2 or trials < 1:
        raise ValueError("need m >= 2 and at least one trial")
    cfg = cfg or TrackerConfig()
    streams = np.random.SeedSequence(seed).spawn(trials)
    counts, failures, notes = [], 0, []
    t0 = time.perf_counter()
    for k, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        system = random_system(variety, m, rng, reduced)
        cps = solve_critical(system, cfg.with_overrides(seed=int(rng.integers(2**32))))
        counts.append(cps.count)
        lost = cps.counts()["path-failure"]
        failures += lost
        if cps.errors:
            notes.append(f"trial {k}: {len(cps.errors)} path errors")
    modal, hits = Counter(counts).most_common(1)[0]
    return EddStats(
        variety=variety,
        m=m,
        counts=counts,
        modal=modal,
        agreement=hits / trials,
        expected=EXPECTED[variety](m),
        failures=failures,
        seconds=time.perf_counter() - t0,
        notes=notes,
    )
