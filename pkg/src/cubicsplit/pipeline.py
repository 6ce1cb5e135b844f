"""Field -> Koch matrix -> resonances -> envelope, in that order."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .config import AnalysisConfig
from .field import CubicField
from .koch import KochData, principal_koch
from .resonances import (
    OscillationConstants,
    PrimitiveRecord,
    ResonanceConstants,
    classify,
    enumerate_primitives,
    half_plane_points,
    is_primitive,
    k0_of,
    oscillation_constants,
    primitive_record,
)
from .splitting import HarmonicParams, SequenceFamily, families_for, primary_family

TABLE_RADIUS = 3


@dataclass(frozen=True)
class Analysis:
    config: AnalysisConfig
    field: CubicField
    koch: KochData
    osc: OscillationConstants
    consts: ResonanceConstants
    params: HarmonicParams
    records: tuple[PrimitiveRecord, ...]
    gamma_cut: float

    @cached_property
    def families(self) -> list[SequenceFamily]:
        if self.config.delta_override is not None:
            # the diagnostic mode only describes the primary envelope
            return [primary_family(self.params, self.consts.primary.k0, self.consts.q_hat)]
        return families_for(self.records, self.params, self.gamma_cut)

    def zeta_range(self) -> tuple[float, float]:
        lo = self.config.zeta_min if self.config.zeta_min is not None else 0.0
        hi = self.config.zeta_max if self.config.zeta_max is not None else self.params.zeta0 + 30.0
        return lo, hi

    def zeta_grid(self) -> np.ndarray:
        lo, hi = self.zeta_range()
        n = int(round((hi - lo) / self.config.zeta_step))
        return lo + self.config.zeta_step * np.arange(n + 1)


def run_analyze(config: AnalysisConfig) -> Analysis:
    field = config.field()
    koch = principal_koch(field)
    osc = oscillation_constants(koch)
    consts = classify(koch)
    params = HarmonicParams.from_analysis(koch, consts, rho=config.rho, window=config.window)
    if config.delta_override is not None:
        params = params.with_delta(config.delta_override)
    need = params.gamma_star * params.J1_plus ** 3
    cut = max(float(config.gamma_cut or 0.0), need)
    records = tuple(enumerate_primitives(koch, cut))
    return Analysis(config, koch.field, koch, osc, consts, params, records, cut)


def table_records(koch: KochData, radius: int = TABLE_RADIUS) -> list[PrimitiveRecord]:
    """Primitive records with |q| < radius, sorted by gamma*."""
    out = []
    for q in half_plane_points(radius):
        if q[0] ** 2 + q[1] ** 2 >= radius ** 2:
            continue
        k0 = k0_of(koch.field, q).k
        if is_primitive(koch.field, koch.lambda_exact, k0):
            out.append(primitive_record(koch, q))
    out.sort(key=lambda r: (r.gamma_star, r.q))
    g0 = min(float(r.gamma_star) for r in out)
    return [dataclasses.replace(r, gamma_star_norm=r.gamma_star / g0) for r in out]
