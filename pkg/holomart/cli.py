"""Command-line entry point: ``holomart {lemma2,correct,diagnose,jn,gen-fixture}``.

Configuration is merged from, in increasing priority, ``HOLOMART_*``
environment variables, a flat ``key=value`` file given with ``--config`` and
command-line flags. Every report embeds the configuration it was produced
with, minus settings that do not affect results (worker count, verbosity,
output location).
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Sequence

from dotenv import dotenv_values

from . import __version__
from .correction import (
    calibrate,
    correct,
    lemma2_step,
    result_report,
    step_seed,
    verify_result,
)
from .exceptions import ConfigurationError, CorrectionError, HolomartError, InputFormatError
from .io import (
    error_payload,
    read_boundary_csv,
    write_boundary_csv,
    write_coefficients_csv,
    write_json,
    write_mask_csv,
    write_path_dump,
    write_series_csv,
)
from .maximal import (
    DiskGrid,
    default_level_grid,
    good_set_B,
    jn_distribution,
    nontangential_max,
    oscillation_tails,
    theorem3_pointwise_check,
)
from .models import CalibrationConstants, RunConfig, parse_model
from .spectral import BoundaryFn, CircleGrid, analytic_completion, completion_trace, fixture

logger = logging.getLogger(__name__)

ENV_PREFIX = "HOLOMART_"
LEMMA2_LAMBDA = 4.0
DIAGNOSE_LAMBDA = 3.0
DIAGNOSE_N_BOUND = 4.0
MC_SIGMAS = 4.0

# Settings that never change a number in a report.
RUNTIME_ONLY = {"workers", "verbose", "output_dir", "dump_paths"}

_KEY_ALIASES = {"lambda": "lam", "n_bound": "n_bound", "input": "input_path", "output": "output_dir"}


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def _normalize_key(key: str) -> str:
    k = key.strip().replace("-", "_")
    k = _KEY_ALIASES.get(k.lower(), k)
    if k not in RunConfig.model_fields:
        k = k.lower()
    if k not in RunConfig.model_fields:
        raise ConfigurationError(f"unknown configuration key {key!r}")
    return k


def env_settings(environ: Optional[Mapping[str, str]] = None) -> Dict[str, str]:
    environ = os.environ if environ is None else environ
    out = {}
    for name, info in RunConfig.model_fields.items():
        for key in filter(None, (name, info.alias)):
            value = environ.get(ENV_PREFIX + key.upper())
            if value is not None:
                out[name] = value
    return out


def file_settings(path: Path) -> Dict[str, Any]:
    """Flat ``key=value`` lines; keys may use dashes or the field aliases."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file {path} does not exist")
    return {_normalize_key(k): v for k, v in dotenv_values(path).items() if v is not None}


def resolve_config(
    flags: Mapping[str, Any],
    config_path: Optional[Path] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    merged: Dict[str, Any] = {}
    merged.update(env_settings(environ))
    if config_path is not None:
        merged.update(file_settings(config_path))
    merged.update({_normalize_key(k): v for k, v in flags.items()})
    return parse_model(RunConfig, merged)


def config_dump(cfg: RunConfig) -> Dict[str, Any]:
    return cfg.model_dump(mode="json", exclude=RUNTIME_ONLY)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def load_input(cfg: RunConfig) -> BoundaryFn:
    """The real boundary function named by ``input_path``, else the configured fixture."""
    if cfg.input_path is None:
        return fixture(CircleGrid(cfg.grid_n), cfg.fixture)
    u = read_boundary_csv(cfg.input_path)
    if not u.is_real:
        raise InputFormatError(f"{cfg.input_path}: input must be real-valued (im column all zero)")
    return u


def _output_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_lemma2(cfg: RunConfig) -> int:
    """One stopping-and-projection step on the analytic completion of the input."""
    u = load_input(cfg)
    lam = LEMMA2_LAMBDA if cfg.lam is None else cfg.lam
    out = _output_dir(cfg)
    step = lemma2_step(
        analytic_completion(u),
        lam,
        cfg.eps,
        cfg.path_config(),
        grid=u.grid,
        f_boundary=completion_trace(u),
        strict=False,
    )
    diag = step.diagnostics
    checks = {
        "sup_norm": diag.sup_norm <= diag.sup_bound,
        "tail_bound": diag.tail.holds,
        # a nonzero defect needs a fitted F* tail to be checked against
        "calibrated_bound": diag.defect == 0.0 or bool(diag.within_calibrated_bound),
    }
    write_coefficients_csv(out / "g.csv", step.g)
    write_mask_csv(out / "E.csv", step.E)
    write_series_csv(out / "tail.csv", diag.tail.tail_lambdas, diag.tail.tail_probabilities)
    if cfg.dump_paths:
        write_path_dump(out / "paths.hmpd", step.samples)
    passed = all(checks.values())
    write_json(
        out / "lemma2.json",
        {"config": config_dump(cfg), "diagnostics": diag, "checks": checks, "passed": passed},
    )
    logger.info("lemma2: defect=%.4g passed=%s", diag.defect, passed)
    return 0 if passed else 4


def cmd_correct(cfg: RunConfig) -> int:
    """Calibrate, run the correction iteration and audit the result."""
    u0 = load_input(cfg)
    pcfg = cfg.path_config()
    out = _output_dir(cfg)
    scale = u0.sup_norm()
    consts, tail, _ = calibrate(
        u0 / scale if scale > 0.0 else u0,
        pcfg.with_seed(step_seed(cfg.seed, 0)),
        lambda_grid=cfg.lambda_grid,
        aperture=cfg.aperture,
    )
    result = correct(u0, cfg.eps, pcfg, consts, cfg.stop_tol)
    verification = verify_result(u0, result)

    write_coefficients_csv(out / "g.csv", result.g)
    write_mask_csv(out / "E.csv", result.E)
    for s in result.steps:
        write_mask_csv(out / "steps" / f"E_{s.index}.csv", s.E_j)
    write_series_csv(
        out / "step_defects.csv",
        [s.index for s in result.steps],
        [1.0 - s.E_j.normalized_measure for s in result.steps],
    )
    report = result_report(result, verification, config_dump(cfg), consts)
    report["calibration_tail"] = tail.model_dump(mode="json")
    write_json(out / "report.json", report)
    logger.info(
        "correct: %d steps, defect=%.4g, agreement=%.4g, passed=%s",
        len(result.steps), result.final_defect, result.max_agreement_error, verification.passed,
    )
    return 0 if verification.passed else 4


def cmd_diagnose(cfg: RunConfig) -> int:
    """Nontangential maximal tails, the pointwise maximal bound and the good set."""
    u = load_input(cfg)
    grid = u.grid
    out = _output_dir(cfg)
    f = analytic_completion(u)
    disk = DiskGrid.default(grid, r_max=cfg.r_exit)
    f_sharp = nontangential_max(f, disk, cfg.aperture)
    levels = cfg.lambda_grid if cfg.lambda_grid is not None else default_level_grid(f_sharp)
    jn_fit = jn_distribution(f_sharp, levels)
    if jn_fit.slope < 0.0:
        consts = CalibrationConstants(delta0=-jn_fit.slope, C0=math.exp(jn_fit.intercept))
    else:
        consts = CalibrationConstants(bounded=True)

    lam = DIAGNOSE_LAMBDA if cfg.lam is None else cfg.lam
    step = lemma2_step(
        f, lam, cfg.eps, cfg.path_config(), grid=grid, f_boundary=completion_trace(u), strict=False
    )
    t3 = theorem3_pointwise_check(
        f,
        step.g_trace,
        lam,
        disk,
        aperture=cfg.aperture,
        mc_tolerance=MC_SIGMAS * step.std_error,
        samples=step.samples,
        reference_radius=cfg.r_exit ** 2,
    )
    n_bound = DIAGNOSE_N_BOUND if cfg.n_bound is None else cfg.n_bound
    _, B, good = good_set_B(f_sharp, completion_trace(u), n_bound, consts)

    write_boundary_csv(out / "f_sharp.csv", f_sharp)
    write_series_csv(out / "jn_tail.csv", jn_fit.lambdas, jn_fit.log_measures)
    write_mask_csv(out / "B.csv", B)
    if cfg.dump_paths:
        write_path_dump(out / "paths.hmpd", step.samples)
    write_json(
        out / "diagnose.json",
        {
            "config": config_dump(cfg),
            "constants": consts,
            "jn_fit": jn_fit,
            "theorem3": t3,
            "good_set": good,
            "lemma2": step.diagnostics,
        },
    )
    logger.info("diagnose: delta0=%.4g |T\\B|=%.4g", consts.delta0, good.measure_complement_B)
    return 0


def cmd_jn(cfg: RunConfig) -> int:
    """Oscillation tails of the conjugate function over dyadic arcs."""
    u = load_input(cfg)
    out = _output_dir(cfg)
    report = oscillation_tails(u, cfg.lambda_grid)
    write_series_csv(out / "jn_tails.csv", report.lambdas, report.sup_tails)
    write_json(out / "jn.json", {"config": config_dump(cfg), "oscillation": report})
    if report.bounded:
        logger.info("jn: tails vanish early (bounded case)")
    else:
        logger.info("jn: fitted exponent %.4g", report.fit.rate)
    return 0


def cmd_gen_fixture(cfg: RunConfig) -> int:
    u = fixture(CircleGrid(cfg.grid_n), cfg.fixture)
    path = write_boundary_csv(_output_dir(cfg) / f"{cfg.fixture}.csv", u)
    logger.info("wrote %s fixture with n=%d to %s", cfg.fixture, cfg.grid_n, path)
    return 0


COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "lemma2": cmd_lemma2,
    "correct": cmd_correct,
    "diagnose": cmd_diagnose,
    "jn": cmd_jn,
    "gen-fixture": cmd_gen_fixture,
}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _common_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--config", type=Path, help="flat key=value configuration file")
    p.add_argument("--input", dest="input_path", type=Path, help="boundary CSV (theta,re,im)")
    p.add_argument("--output-dir", type=Path)
    p.add_argument("--fixture", choices=["square", "cosine", "log"], help="input when --input is absent")
    p.add_argument("--grid-n", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--r-exit", type=float)
    p.add_argument("--n-paths", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--stop-tol", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--n-bound", dest="n_bound", type=float)
    p.add_argument("--lambda-grid", help="comma-separated increasing levels")
    p.add_argument("--aperture", type=float)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--dump-paths", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="holomart", description="Bounded analytic corrections of bounded real functions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_options()
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or "").strip().split("\n")[0])
    return parser


def _write_error(flags: Mapping[str, Any], cfg: Optional[RunConfig], exc: HolomartError) -> None:
    out = Path(cfg.output_dir if cfg is not None else flags.get("output_dir", RunConfig().output_dir))
    payload = error_payload(exc)
    if isinstance(exc, CorrectionError):
        payload["completed_steps"] = [s.summary().model_dump(mode="json") for s in exc.history]
    try:
        write_json(out / "error.json", payload)
    except OSError as io_exc:
        logger.error("could not write error report: %s", io_exc)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    flags = vars(args)
    command = flags.pop("command")
    config_path = flags.pop("config", None)
    logging.basicConfig(
        level=logging.DEBUG if flags.get("verbose") else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    cfg = None
    try:
        cfg = resolve_config(flags, config_path)
        if cfg.verbose:
            logging.getLogger("holomart").setLevel(logging.DEBUG)
        return COMMANDS[command](cfg)
    except HolomartError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        _write_error(flags, cfg, exc)
        return exc.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
