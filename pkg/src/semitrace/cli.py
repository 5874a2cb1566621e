"""Command line interface.

Five subcommands share one config format and one output directory
convention: ``sweep`` and ``compare`` write report.csv plus
components.json, ``analyze-quadratic`` and ``berry-tabor`` write
components.json, ``classify`` writes classify.json.  With --emit-plots
the sweep path additionally renders PNG figures and a gnuplot script
next to the CSV.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .berrytabor import (
    ActionAngleSystem,
    check_integrable_normal_form,
    curvature_from_frequencies,
)
from .config import RunConfig, load_config
from .dynamics import QuadraticHamiltonian, monodromy
from .errors import ConfigError, SemitraceError
from .harness import (
    SweepReport,
    components_payload,
    oscillator_components,
    report_csv_lines,
    run_sweep,
    torus_components,
)
from .orbits import (
    classify_frequencies,
    clean_flow_check,
    enumerate_periods,
    is_group_nondegenerate,
    is_nondegenerate,
    is_normal,
    is_shell_normal,
    kernel_square_saturates,
    oscillator_component,
    oscillator_symmetry_family,
    oscillator_tangent_basis,
    quadratic_integral_family,
)
from .symplectic import DEFAULT_RANK_TOL, invariant_split


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON config path")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for any Monte Carlo auxiliaries")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for independent h values")
    common.add_argument("--emit-plots", action="store_true",
                        help="render PNG figures and a gnuplot script")

    parser = argparse.ArgumentParser(
        prog="semitrace",
        description="Smoothed spectral densities against their "
                    "periodic-component expansions.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser(
        "analyze-quadratic", parents=[common],
        help="periodic components and densities of an oscillator")
    sub.add_parser(
        "berry-tabor", parents=[common],
        help="periodic tori and amplitudes of an integrable model")
    sub.add_parser(
        "classify", parents=[common],
        help="frequency arithmetic classification")
    sub.add_parser(
        "compare", parents=[common],
        help="both sides of the density at each configured h, no scoring")
    sub.add_parser(
        "sweep", parents=[common],
        help="full sweep over h with phase calibration at the smallest h")
    return parser


def _write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _write_report(report: SweepReport, out_dir: str, emit_plots: bool) -> None:
    csv_path = os.path.join(out_dir, "report.csv")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(report_csv_lines(report)) + "\n")
    _write_json(os.path.join(out_dir, "components.json"), {
        "system": report.system_label,
        "energy": report.energy,
        "calibration_h": report.calibration_h,
        "components": components_payload(report),
    })
    if emit_plots:
        from .plots import render_all

        render_all(report, out_dir)


def _cmd_analyze_quadratic(config: RunConfig, args) -> int:
    if not isinstance(config.system, QuadraticHamiltonian):
        raise ConfigError("system.type", "analyze-quadratic needs an oscillator")
    components = oscillator_components(config.system, config.energy,
                                       config.window)
    payload = {
        "system": "oscillator(" + ",".join(
            repr(float(w)) for w in config.system.frequencies) + ")",
        "energy": config.energy,
        "calibration_h": None,
        "components": [],
    }
    for part in components:
        entry = {
            "period": float(part.component.period),
            "dim": int(part.component.dim),
            "action": float(part.component.action),
            "d_squared_re": float(part.density.d_squared.real),
            "d_squared_im": float(part.density.d_squared.imag),
            "second_kernel": int(2 * part.component.resonant_count),
            "measure": float(part.measure),
            "phase_quarter_turns": part.resolved_phase,
            "phase_candidates": list(part.phase_candidates),
            "label": part.component.label.value,
            "resonant_modes": sorted(i + 1 for i in part.component.resonant),
        }
        payload["components"].append(entry)
    _write_json(os.path.join(args.out, "components.json"), payload)
    print(f"wrote {len(components)} components to "
          f"{os.path.join(args.out, 'components.json')}")
    return 0


def _cmd_berry_tabor(config: RunConfig, args) -> int:
    if not isinstance(config.system, ActionAngleSystem):
        raise ConfigError("system.type", "berry-tabor needs an integrable model")
    components = torus_components(config.system, config.energy, config.window,
                                  config.m_bound)
    payload = {
        "system": config.system.name,
        "energy": config.energy,
        "calibration_h": None,
        "components": [],
    }
    for part in components:
        check = check_integrable_normal_form(
            config.system, part.torus.actions, part.torus.period)
        payload["components"].append({
            "period": float(part.component.period),
            "integer_vector": [int(c) for c in part.torus.integer_vector],
            "actions": [float(a) for a in part.torus.actions],
            "action": float(part.component.action),
            "curvature": float(part.curvature),
            "phase_candidates": list(part.phase_candidates),
            "normal_form_consistent": bool(check.consistent),
        })
    _write_json(os.path.join(args.out, "components.json"), payload)
    print(f"wrote {len(components)} tori to "
          f"{os.path.join(args.out, 'components.json')}")
    return 0


def _period_predicates(system: QuadraticHamiltonian, period: float,
                       energy: float, rank_tol: float,
                       rational_bound: int) -> dict:
    component = oscillator_component(system, period, energy)
    z = component.representative
    grad = system.gradient(z)
    mono = monodromy(system, z, component.period)
    split = invariant_split(mono, rank_tol)
    symmetry = oscillator_symmetry_family(system, component.resonant)
    integrals = quadratic_integral_family(
        system, component.resonant, z,
        rank_tol=rank_tol, rational_bound=rational_bound)
    tangent = oscillator_tangent_basis(system, component.period, z,
                                       rank_tol=rank_tol)
    return {
        "dim": int(component.dim),
        "label": component.label.value,
        "predicates": {
            "nondegenerate": bool(is_nondegenerate(split)),
            "group_nondegenerate": bool(is_group_nondegenerate(
                split, grad, symmetry, rank_tol)),
            "normal": bool(is_normal(mono, grad, integrals, rank_tol)),
            "shell_normal": bool(is_shell_normal(
                mono, grad, integrals, rank_tol)),
            "kernel_square_saturates": bool(kernel_square_saturates(split)),
            "clean_flow": bool(clean_flow_check(
                mono, grad, tangent, rank_tol)),
        },
    }


def _cmd_classify(config: RunConfig, args) -> int:
    if not isinstance(config.system, QuadraticHamiltonian):
        raise ConfigError("system.type", "classify needs an oscillator")
    frequencies = config.system.frequencies
    lo, hi = config.window.support
    rank_tol = float(config.tolerances.get("rank_tol", DEFAULT_RANK_TOL))
    result = classify_frequencies(frequencies,
                                  rational_bound=config.rational_bound)
    periods = enumerate_periods(frequencies, (lo, hi))
    entries = []
    for entry in periods.entries:
        record = {
            "period": float(entry.period),
            "resonant_modes": sorted(i + 1 for i in entry.resonant),
        }
        record.update(_period_predicates(
            config.system, entry.period, config.energy,
            rank_tol, config.rational_bound))
        entries.append(record)
    payload = {
        "frequencies": [float(w) for w in frequencies],
        "class": result.kind.value,
        "notes": list(result.notes),
        "periods": entries,
        "near_misses": list(periods.near_misses),
    }
    _write_json(os.path.join(args.out, "classify.json"), payload)
    print(f"class: {result.kind.value}, {len(entries)} periods in window")
    return 0


def _cmd_compare(config: RunConfig, args) -> int:
    report = run_sweep(
        config.system, config.energy, config.epsilon, config.hs,
        config.window, lattice_bound=config.m_bound,
        threads=args.threads, count_cap=config.count_cap,
        torus_offsets=config.torus_offsets,
        psi_halfwidth=config.psi_halfwidth,
        psi_plateau=config.psi_plateau)
    _write_report(report, args.out, args.emit_plots)
    for row in sorted(report.rows, key=lambda r: -r.h):
        tag = " (calibration)" if row.is_calibration else ""
        print(f"h = {row.h:g}: quantum {row.quantum:.6g}, "
              f"semiclassical {row.semiclassical:.6g}, "
              f"rel err {row.rel_err:.3e}{tag}")
    return 0


def _cmd_sweep(config: RunConfig, args) -> int:
    report = run_sweep(
        config.system, config.energy, config.epsilon, config.hs,
        config.window, lattice_bound=config.m_bound,
        threads=args.threads, count_cap=config.count_cap,
        torus_offsets=config.torus_offsets,
        psi_halfwidth=config.psi_halfwidth,
        psi_plateau=config.psi_plateau)
    _write_report(report, args.out, args.emit_plots)
    scored = report.scored_rows()
    worst = max((row.rel_err for row in scored), default=float("nan"))
    print(f"swept {len(report.rows)} h values "
          f"({len(scored)} scored), worst rel err {worst:.3e}")
    return 0


COMMANDS = {
    "analyze-quadratic": _cmd_analyze_quadratic,
    "berry-tabor": _cmd_berry_tabor,
    "classify": _cmd_classify,
    "compare": _cmd_compare,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SemitraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
