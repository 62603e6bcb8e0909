"""Command-line front end.

Subcommands
-----------

``overlaps``   sweep the overlap integrals and their quadrature cross-check
``regrets``    classical-vs-quantum information regrets per measurement
``gauge``      gauge solvers, commutation residuals and the joint eigenbasis
``simulate``   photon-level Monte Carlo against the Cramer-Rao bound

Each command reads an INI-style configuration (flat key = value sections)
and writes one CSV to ``--out``; ``--plot`` additionally renders a PNG next
to it.  All length-valued CSV columns are reported in units of the PSF
width sigma.  Floats are printed with 17 significant digits and LF line
endings so identical (config, seed) runs produce byte-identical files.

Exit codes: 0 success, 2 configuration error, 3 numerical domain error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import plots
from .errors import ConfigError, GaugeInvalid, NoSolution, TwoSourceError
from .gauge import (
    PauliVector,
    assemble_sld,
    closed_form_gauge,
    decompose_blocks,
    gauge_diagnostics,
    joint_eigenbasis,
    necessary_condition_residual,
    solve_gauge_least_norm,
)
from .measure import (
    DirectImaging,
    ProjectiveE,
    Spade,
    classical_fim,
    outcome_distribution,
    regret_report,
)
from .montecarlo import SearchBox, TrialConfig, run_trials
from .psf import GaussianPsf, PsfSpec, QuadratureConfig, SceneParams, TabulatedPsf, \
    compute_overlaps, compute_overlaps_quadrature
from .state import build_model, canonical_slds, qfi_matrix

SWEEP_MIN_SIGMAS = 0.05
SWEEP_MAX_SIGMAS = 10.0


@dataclass(frozen=True)
class McSettings:
    photons: int
    trials: int
    seed: int
    box_centroid_halfwidth: float
    box_separation_lo: float
    box_separation_hi: float


@dataclass(frozen=True)
class RunConfig:
    psf: PsfSpec
    sigma: float
    theta1: float
    theta2_values: tuple[float, ...]
    measurement_names: tuple[str, ...]
    pixel_width: float
    half_range: float
    q_max: int
    alignment: float | None  # None = centroid
    mc: McSettings | None


def _get_float(section, key: str, default: float | None = None) -> float:
    raw = section.get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"[{section.name}] missing required key {key!r}")
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key} = {raw!r} is not a number") from exc


def _get_int(section, key: str, default: int | None = None) -> int:
    raw = section.get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"[{section.name}] missing required key {key!r}")
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key} = {raw!r} is not an integer") from exc


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a run configuration file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    if "psf" not in parser:
        raise ConfigError(f"{path}: missing [psf] section")
    psf_sec = parser["psf"]
    sigma = _get_float(psf_sec, "sigma")
    if sigma <= 0:
        raise ConfigError("[psf] sigma must be positive")
    kind = psf_sec.get("kind", "gaussian").strip().lower()
    if kind == "gaussian":
        psf: PsfSpec = GaussianPsf(sigma)
    elif kind == "tabulated":
        file_key = psf_sec.get("file")
        if not file_key:
            raise ConfigError("[psf] kind = tabulated requires a 'file' key")
        psf_path = Path(file_key)
        if not psf_path.is_absolute():
            psf_path = path.parent / psf_path
        try:
            psf = TabulatedPsf.from_file(psf_path)
        except TwoSourceError as exc:
            raise ConfigError(f"[psf] file: {exc}") from exc
    else:
        raise ConfigError(f"[psf] unknown kind {kind!r}")

    if "scene" not in parser:
        raise ConfigError(f"{path}: missing [scene] section")
    scene_sec = parser["scene"]
    theta1 = _get_float(scene_sec, "theta1", 0.0)

    if "sweep" in parser:
        sweep = parser["sweep"]
        start = _get_float(sweep, "start")
        stop = _get_float(sweep, "stop")
        steps = _get_int(sweep, "steps")
        if steps < 2:
            raise ConfigError("[sweep] steps must be >= 2")
        lo, hi = SWEEP_MIN_SIGMAS * sigma, SWEEP_MAX_SIGMAS * sigma
        if not (lo < start < hi and lo < stop < hi and start < stop):
            raise ConfigError(
                f"[sweep] bounds must satisfy {lo:g} < start < stop < {hi:g}"
            )
        theta2_values = tuple(np.linspace(start, stop, steps).tolist())
    else:
        theta2 = _get_float(scene_sec, "theta2")
        if theta2 <= 0:
            raise ConfigError("[scene] theta2 must be positive")
        theta2_values = (theta2,)

    meas_sec = parser["measurements"] if "measurements" in parser else {}
    names_raw = meas_sec.get("names", "direct, spade, joint") if meas_sec else "direct, spade, joint"
    names = tuple(n.strip().lower() for n in names_raw.split(",") if n.strip())
    for name in names:
        if name not in ("direct", "spade", "joint"):
            raise ConfigError(f"[measurements] unknown name {name!r}")
    pixel_width = _get_float(meas_sec, "pixel_width", 0.05 * sigma) if meas_sec else 0.05 * sigma
    half_range = _get_float(meas_sec, "half_range", 8.0 * sigma) if meas_sec else 8.0 * sigma
    q_max = _get_int(meas_sec, "q_max", 20) if meas_sec else 20
    alignment = None
    if meas_sec and meas_sec.get("alignment") is not None:
        alignment = _get_float(meas_sec, "alignment")

    mc = None
    if "montecarlo" in parser:
        mc_sec = parser["montecarlo"]
        mc = McSettings(
            photons=_get_int(mc_sec, "photons", 100_000),
            trials=_get_int(mc_sec, "trials", 500),
            seed=_get_int(mc_sec, "seed", 0),
            box_centroid_halfwidth=_get_float(mc_sec, "box_centroid_halfwidth", 0.25 * sigma),
            box_separation_lo=_get_float(mc_sec, "box_separation_lo"),
            box_separation_hi=_get_float(mc_sec, "box_separation_hi"),
        )
        if mc.photons < 1 or mc.trials < 1:
            raise ConfigError("[montecarlo] photons and trials must be >= 1")
        if not 0 < mc.box_separation_lo < mc.box_separation_hi:
            raise ConfigError("[montecarlo] need 0 < box_separation_lo < box_separation_hi")
    return RunConfig(
        psf=psf, sigma=sigma, theta1=theta1, theta2_values=theta2_values,
        measurement_names=names, pixel_width=pixel_width, half_range=half_range,
        q_max=q_max, alignment=alignment, mc=mc,
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", newline="")


def _build_povm(name: str, cfg: RunConfig, scene: SceneParams):
    """Instantiate a catalogue measurement; 'joint' solves the gauge first."""
    if name == "direct":
        return DirectImaging(pixel_width=cfg.pixel_width, half_range=cfg.half_range)
    if name == "spade":
        alignment = cfg.theta1 if cfg.alignment is None else cfg.alignment
        return Spade(alignment=alignment, q_max=cfg.q_max)
    overlaps = compute_overlaps(cfg.psf, scene.theta2)
    pair = closed_form_gauge(overlaps)
    l1, l2 = canonical_slds(overlaps)
    l1p = assemble_sld(decompose_blocks(l1), pair.k1)
    l2p = assemble_sld(decompose_blocks(l2), pair.k2)
    return ProjectiveE(joint_eigenbasis(l1p, l2p))


def cmd_overlaps(cfg: RunConfig, out: Path, plot: bool) -> int:
    header = ["theta2", "delta", "kappa", "gamma", "beta", "eta3", "eta4",
              "beta_quadrature_diff"]
    s = cfg.sigma
    rows = []
    for theta2 in cfg.theta2_values:
        ov = compute_overlaps(cfg.psf, theta2)
        quad = compute_overlaps_quadrature(cfg.psf, theta2, QuadratureConfig())
        rows.append([
            theta2 / s, ov.delta, ov.kappa * s**2, ov.gamma * s, ov.beta * s**2,
            ov.eta3 * s, ov.eta4 * s, (ov.beta - quad.beta) * s**2,
        ])
    _write_csv(out, header, rows)
    if plot:
        dicts = [dict(zip(header, r)) for r in rows]
        plots.render_overlaps(dicts, out.with_suffix(".png"))
    return 0


def cmd_regrets(cfg: RunConfig, out: Path, plot: bool) -> int:
    header = ["theta2", "measurement", "F11", "F22", "F12", "QFI11", "QFI22",
              "c", "delta1", "delta2", "irtr_slack"]
    s = cfg.sigma
    rows = []
    for theta2 in cfg.theta2_values:
        scene = SceneParams(theta1=cfg.theta1, theta2=theta2)
        model = build_model(cfg.psf, scene)
        qfi = qfi_matrix(model)
        for name in cfg.measurement_names:
            try:
                povm = _build_povm(name, cfg, scene)
            except TwoSourceError as exc:
                print(f"note: skipping {name} at theta2={theta2:g}: {exc}",
                      file=sys.stderr)
                continue
            dist = outcome_distribution(povm, cfg.psf, scene, model)
            fim = classical_fim(dist)
            report = regret_report(fim, qfi)
            rows.append([
                theta2 / s, name,
                fim[0, 0] * s**2, fim[1, 1] * s**2, fim[0, 1] * s**2,
                qfi.qfi[0, 0] * s**2, qfi.qfi[1, 1] * s**2,
                report.c, report.delta1, report.delta2, report.irtr_slack,
            ])
    _write_csv(out, header, rows)
    if plot:
        dicts = [dict(zip(header, r)) for r in rows]
        plots.render_regrets(dicts, out.with_suffix(".png"))
    return 0


def cmd_gauge(cfg: RunConfig, out: Path, plot: bool) -> int:
    header = (
        ["theta2", "solver", "status", "c0_residual", "c1_residual", "c2_residual",
         "commutator_norm"]
        + [f"k1_v{a}" for a in range(4)] + [f"k2_v{a}" for a in range(4)]
        + [f"lam1_q{j}" for j in range(1, 5)] + [f"lam2_q{j}" for j in range(1, 5)]
    )
    s = cfg.sigma
    rows = []
    for theta2 in cfg.theta2_values:
        overlaps = compute_overlaps(cfg.psf, theta2)
        l1, l2 = canonical_slds(overlaps)
        d1, d2 = decompose_blocks(l1), decompose_blocks(l2)
        c0 = necessary_condition_residual(d1, d2)
        print(f"theta2/sigma = {theta2 / s:g}: necessary-condition residual = "
              f"{c0 * s**2:.3e}")
        for solver in ("closed_form", "least_norm_solver"):
            try:
                if solver == "closed_form":
                    pair = closed_form_gauge(overlaps)
                else:
                    hint = None
                    if abs(overlaps.gamma) > 1e-12:
                        hint = (2.0 * overlaps.gamma / (1.0 - overlaps.delta**2)
                                - 2.0 * overlaps.kappa / overlaps.gamma)
                    pair = solve_gauge_least_norm(d1, d2, v0_k1=hint)
            except (NoSolution, GaugeInvalid) as exc:
                print(f"  {solver}: no solution ({exc})")
                rows.append([theta2 / s, solver, "no_solution", c0 * s**2]
                            + [None] * (len(header) - 4))
                continue
            l1p = assemble_sld(d1, pair.k1)
            l2p = assemble_sld(d2, pair.k2)
            comm = float(np.abs(l1p @ l2p - l2p @ l1p).max())
            basis = joint_eigenbasis(l1p, l2p)
            pv1 = PauliVector.from_matrix(pair.k1).as_array() * s
            pv2 = PauliVector.from_matrix(pair.k2).as_array() * s
            print(f"  {solver}: ok; commutator max-norm = {comm * s**2:.3e}")
            print("  " + json.dumps(gauge_diagnostics(d1, d2, pair)))
            rows.append(
                [theta2 / s, solver, "ok", c0 * s**2,
                 pair.residual_c1 * s**2, pair.residual_c2 * s**2, comm * s**2]
                + pv1.tolist() + pv2.tolist()
                + (basis.eigenvalues[:, 0] * s).tolist()
                + (basis.eigenvalues[:, 1] * s).tolist()
            )
    _write_csv(out, header, rows)
    if plot:
        dicts = [dict(zip(header, r)) for r in rows]
        plots.render_gauge(dicts, out.with_suffix(".png"))
    return 0


def cmd_simulate(cfg: RunConfig, out: Path, plot: bool, seed_override: int | None) -> int:
    if cfg.mc is None:
        raise ConfigError("simulate requires a [montecarlo] section")
    if len(cfg.theta2_values) != 1:
        raise ConfigError("simulate requires a single [scene] theta2, not a sweep")
    mc = cfg.mc if seed_override is None else replace(cfg.mc, seed=seed_override)
    s = cfg.sigma
    theta2 = cfg.theta2_values[0]
    scene = SceneParams(theta1=cfg.theta1, theta2=theta2)
    box = SearchBox(
        theta1_lo=cfg.theta1 - mc.box_centroid_halfwidth,
        theta1_hi=cfg.theta1 + mc.box_centroid_halfwidth,
        theta2_lo=mc.box_separation_lo,
        theta2_hi=mc.box_separation_hi,
    )
    trial_cfg = TrialConfig(photons=mc.photons, trials=mc.trials, seed=mc.seed, box=box)
    header = ["measurement", "N", "trials", "var1", "var2", "crb1", "crb2",
              "ratio1", "ratio2", "seed"]
    rows = []
    for name in cfg.measurement_names:
        try:
            povm = _build_povm(name, cfg, scene)
            result = run_trials(povm, cfg.psf, scene, trial_cfg)
        except TwoSourceError as exc:
            print(f"note: skipping {name}: {exc}", file=sys.stderr)
            continue
        if result.boundary_warning:
            print(f"warning: {name}: {result.boundary_fraction:.1%} of estimates "
                  "hug the search-box boundary; box too small", file=sys.stderr)
        rows.append([
            name, mc.photons, mc.trials,
            result.empirical_cov[0, 0] / s**2, result.empirical_cov[1, 1] / s**2,
            result.crb[0, 0] / s**2, result.crb[1, 1] / s**2,
            result.ratio[0, 0], result.ratio[1, 1], mc.seed,
        ])
    _write_csv(out, header, rows)
    if plot:
        dicts = [dict(zip(header, r)) for r in rows]
        plots.render_simulate(dicts, out.with_suffix(".png"))
    return 0


def _parse_args(argv):
    parser = argparse.ArgumentParser(
        prog="twosource",
        description="Two-point-source estimation toolkit: overlaps, regrets, "
                    "gauge construction and Monte Carlo verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("overlaps", "overlap integrals with quadrature cross-check"),
        ("regrets", "classical/quantum Fisher information and regrets"),
        ("gauge", "commuting-SLD gauge pairs and the joint eigenbasis"),
        ("simulate", "photon Monte Carlo against the Cramer-Rao bound"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="INI configuration file")
        p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the configured seed (simulate only)")
        p.add_argument("--plot", action="store_true",
                       help="also render a PNG figure next to the CSV")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = _parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = Path(args.out)
        if out.parent and not out.parent.exists():
            raise ConfigError(f"output directory {out.parent} does not exist")
        if args.command == "overlaps":
            return cmd_overlaps(cfg, out, args.plot)
        if args.command == "regrets":
            return cmd_regrets(cfg, out, args.plot)
        if args.command == "gauge":
            return cmd_gauge(cfg, out, args.plot)
        return cmd_simulate(cfg, out, args.plot, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TwoSourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
