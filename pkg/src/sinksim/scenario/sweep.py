"""Slope x entry-duration sweeps; every run gets a freshly settled bed."""
from __future__ import annotations
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Callable, Iterable, Optional

from ..granular.materials import MaterialTable
from ..mbd.gripper import GripperGeometry
from ..mbd.profile import LoadProfile, gravity_vector
from ..utils.errors import SinksimError, StabilityError
from ..utils.printing import PRINTER as p
from .sandbox import SandboxSpec, fill_and_settle
from .sinkage import REFERENCE_SINKAGE_MM, RunRecord, pressure_sinkage_run

# slopes this far past the repose angle only warn
REPOSE_MARGIN_DEG = 5.0


@dataclass(frozen=True)
class SweepJob:
    index: int
    theta_deg: float
    t4: float
    seed: int
    sandbox: SandboxSpec
    materials: MaterialTable
    geometry: GripperGeometry
    profile: LoadProfile
    gravity: float
    dt_cpl: float
    sample_rate: float
    safety_fraction: float
    metadata: tuple[tuple[str, Any], ...] = ()

    @property
    def name(self) -> str:
        return f"theta{self.theta_deg:g}_t4{self.t4:g}_seed{self.seed}"


@dataclass
class SweepResult:
    job: SweepJob
    record: Optional[RunRecord] = None
    error: Optional[str] = None
    exit_code: int = 0

    @property
    def ok(self) -> bool:
        return self.error is None


def build_jobs(
    sandbox: SandboxSpec,
    materials: MaterialTable,
    geometry: GripperGeometry,
    profile: LoadProfile,
    thetas_deg: Iterable[float],
    durations: Iterable[float],
    gravity: float,
    seed: int,
    dt_cpl: float,
    sample_rate: float = 100.0,
    safety_fraction: float = 0.2,
    metadata: Optional[dict[str, Any]] = None,
) -> list[SweepJob]:
    jobs: list[SweepJob] = []
    durations = list(durations)
    for theta in thetas_deg:
        for t4 in durations:
            jobs.append(SweepJob(
                index=len(jobs), theta_deg=float(theta), t4=float(t4), seed=seed + len(jobs),
                sandbox=sandbox, materials=materials, geometry=geometry, profile=profile,
                gravity=gravity, dt_cpl=dt_cpl, sample_rate=sample_rate,
                safety_fraction=safety_fraction,
                metadata=tuple(sorted((metadata or {}).items())),
            ))
    return jobs


def run_job(job: SweepJob) -> SweepResult:
    """One sweep point. Module-level so worker processes can import it."""
    theta = math.radians(job.theta_deg)
    profile = replace(job.profile, theta=theta, t4=job.t4)
    try:
        bed = fill_and_settle(job.sandbox, job.materials, job.seed, gravity=job.gravity,
                              safety_fraction=job.safety_fraction)
        record = pressure_sinkage_run(
            bed, job.geometry, profile, gravity_vector(job.gravity, theta), job.dt_cpl,
            sample_rate=job.sample_rate, safety_fraction=job.safety_fraction,
            metadata=dict(job.metadata),
        )
    except StabilityError as e:
        return SweepResult(job, e.partial_record, str(e), e.exit_code)
    except SinksimError as e:
        return SweepResult(job, None, str(e), e.exit_code)
    return SweepResult(job, record)


def slope_sweep(
    jobs: list[SweepJob],
    workers: int = 1,
    repose_deg: Optional[float] = None,
    on_done: Optional[Callable[[SweepResult], None]] = None,
) -> list[SweepResult]:
    """Run every job; failures are collected, not raised. Results keep job order."""
    if repose_deg is not None:
        for theta in sorted({j.theta_deg for j in jobs}):
            if theta > repose_deg + REPOSE_MARGIN_DEG:
                p.warn(f"slope {theta:g}° is above the repose angle {repose_deg:g}° "
                       f"+ {REPOSE_MARGIN_DEG:g}°")
    results: list[SweepResult] = []
    if workers <= 1 or len(jobs) <= 1:
        for job in jobs:
            results.append(run_job(job))
            if on_done is not None:
                on_done(results[-1])
        return results
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for res in pool.map(run_job, jobs):
            results.append(res)
            if on_done is not None:
                on_done(res)
    return results


def slope_ratios(results: list[SweepResult]) -> list[dict[str, Any]]:
    """Final sinkage of each run against the flat run of the same duration, next to the bench."""
    flat = {
        r.job.t4: r.record.final_sinkage
        for r in results if r.ok and r.record is not None and r.job.theta_deg == 0
    }
    bench_flat = REFERENCE_SINKAGE_MM[0]
    rows: list[dict[str, Any]] = []
    for r in results:
        row: dict[str, Any] = {"theta_deg": r.job.theta_deg, "t4_s": r.job.t4, "ok": r.ok}
        if r.ok and r.record is not None:
            z = r.record.final_sinkage
            row["final_sinkage_m"] = z
            base = flat.get(r.job.t4)
            row["ratio_to_flat"] = z / base if base else None
        bench = REFERENCE_SINKAGE_MM.get(int(round(r.job.theta_deg)))
        row["bench_ratio_to_flat"] = bench / bench_flat if bench is not None else None
        rows.append(row)
    return rows
