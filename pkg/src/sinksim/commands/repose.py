from __future__ import annotations
import argparse

from ..scenario.repose import angle_of_repose
from ..scenario.sandbox import surface_height_map
from ..utils.errors import SinksimError
from ..utils.io import write_height_map, write_json, write_profile_csv
from ..utils.printing import PRINTER as p
from .common import chunk_runner, config_from_args, out_dir


def _progress(stage: str, t: float) -> None:
    p.progress(f"{stage} t={t:.2f}s")


def run(args: argparse.Namespace) -> int:
    try:
        cfg = config_from_args(args)
        target = out_dir(args, cfg)
        spec = cfg.repose
        p.header(f"REPOSE {spec.material}")
        with chunk_runner(cfg) as runner:
            result = angle_of_repose(
                spec, cfg.scaled_materials(), cfg.seed, gravity=cfg.gravity_magnitude,
                safety_fraction=cfg.solver.safety_fraction, runner=runner,
                on_progress=_progress,
            )
    except SinksimError as e:
        p.footer_fail(str(e))
        return e.exit_code

    heap = result.particles
    assert heap is not None
    write_profile_csv(target / "repose_profile.csv", result.profile_r, result.profile_h)
    plate = (spec.plate_size, spec.plate_size)
    write_height_map(target / "repose_heights.txt",
                     surface_height_map(heap, spec.particle_diameter, plate),
                     spec.particle_diameter)
    write_json(target / "repose.json", {
        **result.to_dict(),
        "material": spec.material,
        "seed": cfg.seed,
        "particle_count": len(heap),
        "stiffness_scale": cfg.solver.stiffness_scale,
        "target_deg": cfg.materials[cfg.materials.index(spec.material)].repose_target_deg,
    })
    if result.degenerate:
        p.warn("heap is degenerate (apex below two particle diameters); angle is unreliable")
    p.summary({
        "angle of repose (deg)": round(result.angle_deg, 2),
        "apex height (mm)": round(result.apex_height * 1e3, 2),
        "heap radius (mm)": round(result.heap_radius * 1e3, 2),
    })
    p.footer_ok(f"Heap profile written to {target / 'repose_profile.csv'}")
    return 0
