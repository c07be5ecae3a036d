"""One object holding every finite piece built from a parameter set."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from .cantor import CantorLevels, build_levels
from .carleson import CarlesonSeries, CarlesonSystem, cached_series
from .params import Params, derived_constants, params_hash
from .riesz import IndexSet, RieszMeasure


@dataclass
class Construction:
    params: Params
    use_cache: bool = True
    C_override: Fraction | None = None

    @cached_property
    def hash(self) -> str:
        return params_hash(self.params)

    @cached_property
    def index(self) -> IndexSet:
        return IndexSet.for_params(self.params)

    @cached_property
    def measure(self) -> RieszMeasure:
        return RieszMeasure(self.params.alpha, self.index)

    @cached_property
    def levels(self) -> CantorLevels:
        return build_levels(self.params)

    @cached_property
    def system(self) -> CarlesonSystem:
        return CarlesonSystem(self.measure, self.params.exponents)

    @cached_property
    def constants(self):
        return derived_constants(self.params.alpha)

    @cached_property
    def series(self) -> CarlesonSeries:
        return cached_series(self.system, self.hash, C=self.C_override, use_cache=self.use_cache)

    @cached_property
    def embedding(self):
        from .embedding import Embedding

        return Embedding(self.measure, self.levels, self.series, self.system, rho=self.params.rho, d=self.params.d)
