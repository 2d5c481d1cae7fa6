# Import libraries
import logging
from typing import Any

import numpy as np

from common.types import (
    BarrierTable,
    BoundaryData,
    CalibrationReport,
    ChainModel,
    ChainStationary,
    CriticalKind,
    CriticalPointSet,
    EntropyReport,
    ExchangeReport,
    GridFunction,
    Landscape,
    LdpReport,
    PeierlsBarrier,
    PiecewiseCurve,
    Potential,
    PotentialSpec,
    SchemeConfig,
    Trajectory,
    ViscosityReport,
)
from common.utils.in_memory_cache import StageCache
from services import barriers, dynamics, evolution, landscape, stochastic, viscosity
from services.curves import sample_curve
from services.potential import build_potential, find_critical_points, fingerprint

logger = logging.getLogger(__name__)


class EnergyLandscapeService:
    """
    One potential and every pipeline stage built on it.

    Stage results are cached per potential fingerprint, so repeated calls
    (from the CLI or the tool server) reuse barrier tables and curves.
    """

    def __init__(self, spec: PotentialSpec | dict | Potential):
        self.potential = spec if isinstance(spec, Potential) else build_potential(spec)
        self.key = fingerprint(self.potential)
        self.cache = StageCache()

    def _stage(self, name: str, factory) -> Any:
        return self.cache.get_or_compute(self.key, name, factory)

    # Geometry
    def critical_points(self) -> CriticalPointSet:
        return self._stage("critical_points", lambda: find_critical_points(self.potential))

    def barrier_table(self) -> BarrierTable:
        return self._stage("barrier_table", lambda: barriers.barrier_table(self.critical_points()))

    def peierls(self, index: int, kind: CriticalKind | str = CriticalKind.MINIMUM) -> PeierlsBarrier:
        kind = CriticalKind(kind)
        return self._stage(
            f"peierls:{kind.value}:{index}",
            lambda: barriers.peierls_barrier(self.potential, self.critical_points(), index, kind),
        )

    def minima_barriers(self) -> list[PeierlsBarrier]:
        return [self.peierls(i) for i in range(self.critical_points().k)]

    def mane(self, anchor: float) -> PiecewiseCurve:
        return barriers.mane_potential(self.potential, self.critical_points(), anchor)

    # Landscape
    def boundary(self, mode: str = "fw", values: list[float] | None = None) -> BoundaryData:
        """
        Boundary data on the minima.

        Args:
            mode (str): "fw", "zero" or "file" (values supplied by the caller).
            values (list[float] | None): Raw values for "file"; made consistent first.

        Returns:
            BoundaryData: Data ready for build_landscape.
        """
        bt = self.barrier_table()
        if mode == "fw":
            return self._stage("boundary:fw", lambda: landscape.boundary_values_fw(bt))
        if mode == "zero":
            return landscape.boundary_values_zero(bt.k)
        if mode == "file":
            if values is None or len(values) != bt.k:
                raise ValueError(f"expected {bt.k} boundary values")
            return landscape.make_consistent(dict(enumerate(values)), bt)
        raise ValueError(f"unknown boundary mode '{mode}'")

    def landscape(self, mode: str = "fw", values: list[float] | None = None) -> Landscape:
        bd = self.boundary(mode, values)

        def build() -> Landscape:
            return landscape.build_landscape(
                self.potential, self.critical_points(), bd, self.barrier_table(), self.minima_barriers()
            )

        if mode == "file":
            return build()
        return self._stage(f"landscape:{mode}", build)

    def lifted_curves(self, mode: str = "fw") -> list:
        return landscape.lifted_peierls_curves(
            self.potential, self.critical_points(), self.landscape(mode), self.minima_barriers()
        )

    # Verification
    def verify(self, curve: PiecewiseCurve | None = None) -> tuple[ViscosityReport, EntropyReport]:
        curve = curve or self.landscape().Wstar
        return viscosity.check_viscosity(curve, self.potential), viscosity.check_entropy_shock(curve, self.potential)

    def calibrate(self, points: list[float]) -> list[tuple[Trajectory, CalibrationReport]]:
        land = self.landscape()
        results = []
        for x in points:
            for trajectory in dynamics.calibrated_curve(self.potential, self.critical_points(), land, x):
                results.append((trajectory, dynamics.verify_calibration(self.potential, trajectory, land)))
        return results

    # Noise
    def wkb(self, eps: float, n: int) -> GridFunction:
        return stochastic.wkb(self.potential, eps, n)

    def ldp(self, eps_list: list[float], n: int) -> LdpReport:
        return stochastic.ldp_convergence(self.potential, self.landscape(), eps_list, n)

    def chain(self, eps: float) -> tuple[ChainModel, ChainStationary]:
        model = stochastic.chain_generator(self.critical_points(), eps)
        return model, stochastic.chain_stationary(model)

    # Evolution
    def sampled_wstar(self, n: int) -> GridFunction:
        xs = np.arange(n) / n
        return GridFunction(values=sample_curve(self.landscape().Wstar, self.potential, xs))

    def evolve(self, cfg: SchemeConfig, times: list[float], initial: GridFunction | None = None) -> list[GridFunction]:
        u0 = initial or self.sampled_wstar(cfg.n)
        return evolution.evolve_hje_snapshots(u0, self.potential, cfg, times)

    def exchange(self, eps_list: list[float], T: float, n: int, cfl: float = 0.45) -> ExchangeReport:
        return evolution.exchange_limits_experiment(self.potential, self.landscape(), eps_list, T, n, cfl)

    def invalidate(self) -> int:
        removed = self.cache.invalidate(self.key)
        logger.debug(f"Dropped {removed} cached stages for {self.key}")
        return removed

