"""Command-line front end: ``cphase {hom,entangle,qpt,fit,report}``.

Exit codes: 0 success, 2 usage error, 3 numerical/convergence error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, io, kernels
from .core import BASIS_ORDER, PAULI_LABELS, product_state
from .counts import RNG_NAME, derive_seed, write_csv, write_jsonl
from .exceptions import ConvergenceError, CPhaseError, InvalidInputError
from .fit import ModelSpec, fit_quality, measured_outputs_from_chi
from .gate import (
    GateConfig,
    PRESETS,
    apply_gate,
    hom_scan,
    load_config,
    overlap_quality,
    visibility,
)
from .qpt import (
    ideal_chi,
    chi_min_eigenvalue,
    chi_is_physical,
    chi_residual,
    process_fidelity,
    reconstruct_chi,
    simulate_process_data,
)
from .tomography import analyze_entangling_run, exact_rates, measure_state, reconstruct_state

CONFIG_DIR_ENV = "CPHASE_CONFIG_DIR"
SHOWCASE_INPUTS = ("++", "+L", "L+", "LL")

# Experimentally reported values, shown next to simulated ones; not reproducible by the Q' model alone.
EXPERIMENT_REFERENCE = {
    "hom_visibility": 0.728,
    "overlap_quality": 0.910,
    "fidelity_L+": 0.878,
    "fidelity_min": 0.805,
    "log_negativity_L+": 0.75,
    "log_negativity_min": 0.73,
    "process_fidelity": 0.818,
    "fitted_quality": 0.904,
    "model_fidelity_mean": 0.966,
    "model_fidelity_std": 0.017,
}

EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 2, 3, 4


class UsageError(Exception):
    pass


def resolve_config(source: str) -> tuple[GateConfig, str]:
    if source in PRESETS or Path(source).exists():
        return load_config(source), source
    cfg_dir = os.environ.get(CONFIG_DIR_ENV)
    if cfg_dir:
        for candidate in (Path(cfg_dir) / source, Path(cfg_dir) / f"{source}.json"):
            if candidate.exists():
                return load_config(candidate), str(candidate)
    raise UsageError(f"config {source!r} is neither a preset {PRESETS}, a file, nor found in ${CONFIG_DIR_ENV}")


def parse_state(spec: str) -> np.ndarray:
    """Two-letter product label (e.g. ``L+``) or four comma-separated complex amplitudes."""
    if "," in spec:
        try:
            amps = np.array([complex(x.strip().replace("i", "j")) for x in spec.split(",")])
        except ValueError:
            raise UsageError(f"cannot parse amplitudes {spec!r}") from None
        if amps.shape != (4,) or np.linalg.norm(amps) == 0:
            raise UsageError("explicit state needs four amplitudes, not all zero")
        return amps / np.linalg.norm(amps)
    try:
        return product_state(spec)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from None


def _config_with_quality(args) -> tuple[GateConfig, str]:
    cfg, path = resolve_config(args.config)
    if getattr(args, "quality", None) is not None:
        cfg = cfg.with_quality(args.quality)
    return cfg, path


def _prepare_out(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    return out


def write_manifest(out: Path, args, config_path: str) -> None:
    io.write_json(out / "manifest.json", {
        "config": config_path,
        "subcommand": args.command,
        "seed": args.seed,
        "output_dir": str(out),
        "tool_version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "kernel_backend": kernels.backend(),
        "rng": RNG_NAME,
    })


def _payload(**fields) -> dict:
    return {"manifest": "manifest.json", **fields}


# subcommands

def run_hom(cfg: GateConfig, state: np.ndarray, delays: np.ndarray, out: Path) -> dict:
    probs = hom_scan(cfg, state, delays)
    io.write_rows_csv(out / "hom_scan.csv", ["delay_um", "coincidence_probability"], zip(delays, probs))
    c0, c_inf = hom_scan(cfg, state, [0.0, np.inf])
    v = visibility(c0, c_inf)
    t0, t_inf = hom_scan(cfg.with_quality(1.0), state, [0.0, np.inf])
    v_th = visibility(t0, t_inf)
    summary = {
        "c0": c0, "c_inf": c_inf, "visibility": v, "visibility_theory": v_th,
        "overlap_quality": overlap_quality(v, v_th) if v_th > 0 else None,
        "config_quality": cfg.quality,
        "experiment_reference": {k: EXPERIMENT_REFERENCE[k] for k in ("hom_visibility", "overlap_quality")},
    }
    io.write_json(out / "hom_summary.json", _payload(**summary))
    return summary


def cmd_hom(args) -> int:
    cfg, path = _config_with_quality(args)
    state = parse_state(args.input)
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    out = _prepare_out(args)
    write_manifest(out, args, path)
    delays = np.linspace(args.delay_min, args.delay_max, args.steps)
    summary = run_hom(cfg, state, delays, out)
    q = summary["overlap_quality"]
    print(f"V = {summary['visibility']:.4f}  V_th = {summary['visibility_theory']:.4f}  "
          f"Q = {'n/a' if q is None else f'{q:.4f}'}")
    return 0


def run_entangle(cfg: GateConfig, state: np.ndarray, args, out: Path, tag: str = "") -> dict:
    raw, p = apply_gate(state, cfg)
    if args.noiseless:
        rec = reconstruct_state(exact_rates(raw / p))
        records = []
    else:
        rates, errors, records = measure_state(raw, args.pairs, args.seed)
        rec = reconstruct_state(rates, errors)
    report = analyze_entangling_run(state, rec, n_resamples=0 if args.noiseless else args.resamples,
                                    seed=derive_seed(args.seed, 999))
    suffix = f"_{tag}" if tag else ""
    io.write_matrix_csv(out / f"density_matrix{suffix}.csv", rec.rho, BASIS_ORDER)
    if records:
        write_jsonl(records, out / f"counts{suffix}.jsonl")
        write_csv(records, out / f"counts{suffix}.csv")
    result = {
        "input": io.state_to_json(state),
        "success_probability": p,
        "rho": io.state_to_json(rec.rho),
        "min_eigenvalue": rec.min_eigenvalue,
        "physical": rec.physical,
        "fidelity": report.fidelity,
        "fidelity_err": report.fidelity_err,
        "log_negativity": report.log_negativity,
        "log_negativity_err": report.log_negativity_err,
        "chsh_violated": report.chsh_violated,
        "n_resamples": report.n_resamples,
        "noiseless": bool(args.noiseless),
        "pairs_per_setting": None if args.noiseless else args.pairs,
    }
    io.write_json(out / f"entangle_report{suffix}.json", _payload(**result))
    return result


def cmd_entangle(args) -> int:
    cfg, path = _config_with_quality(args)
    state = parse_state(args.state)
    out = _prepare_out(args)
    write_manifest(out, args, path)
    r = run_entangle(cfg, state, args, out)
    err = "" if r["fidelity_err"] is None else f" ± {r['fidelity_err']:.4f}"
    print(f"F = {r['fidelity']:.4f}{err}  N = {r['log_negativity']:.4f}  CHSH violated: {r['chsh_violated']}")
    return 0


def run_qpt(cfg: GateConfig, args, out: Path) -> tuple[np.ndarray, dict]:
    data = simulate_process_data(cfg, args.pairs, args.seed, noiseless=args.noiseless)
    chi = reconstruct_chi(data)
    fp = process_fidelity(ideal_chi(), chi)
    summary = {
        "process_fidelity": fp,
        "chi_min_eigenvalue": chi_min_eigenvalue(chi),
        "chi_physical": chi_is_physical(chi),
        "chi_trace": float(np.trace(chi).real),
        "mean_abs_imag": float(np.abs(chi.imag).mean()),
        "equation_residual": chi_residual(chi, data),
        "noiseless": bool(args.noiseless),
        "pairs_per_setting": None if args.noiseless else args.pairs,
        "experiment_reference": {"process_fidelity": EXPERIMENT_REFERENCE["process_fidelity"]},
    }
    io.write_json(out / "chi.json", _payload(**io.chi_to_json(chi, config=cfg.to_dict())))
    io.write_matrix_csv(out / "chi.csv", chi, PAULI_LABELS)
    io.write_rows_csv(out / "probabilities.csv", ["input", "p"], zip(data.labels, data.probabilities))
    io.write_json(out / "qpt_report.json", _payload(**summary))
    return chi, summary


def cmd_qpt(args) -> int:
    cfg, path = _config_with_quality(args)
    out = _prepare_out(args)
    write_manifest(out, args, path)
    _, s = run_qpt(cfg, args, out)
    print(f"F_p = {s['process_fidelity']:.4f}  min eig(chi) = {s['chi_min_eigenvalue']:.4f}")
    return 0


def run_fit(chi: np.ndarray, skeleton: GateConfig, variant: str, free_ratio: bool, out: Path,
            name: str = "fit_result.json") -> tuple[dict, bool]:
    spec = ModelSpec(variant=variant, skeleton=skeleton, free_ratio=free_ratio)
    converged = True
    try:
        result = fit_quality(chi, spec, measured=measured_outputs_from_chi(chi))
    except ConvergenceError as exc:
        result, converged = exc.best, False
    payload = result.to_dict()
    payload["experiment_reference"] = {k: EXPERIMENT_REFERENCE[k] for k in
                                       ("fitted_quality", "model_fidelity_mean", "model_fidelity_std")}
    io.write_json(out / name, _payload(**payload))
    return payload, converged


def cmd_fit(args) -> int:
    try:
        chi_doc = io.read_json(args.chi)
    except OSError as exc:
        raise OSError(f"cannot read χ file {args.chi}: {exc}") from exc
    try:
        chi = io.chi_from_json(chi_doc)
    except (InvalidInputError, KeyError, ValueError) as exc:
        raise UsageError(f"invalid χ file {args.chi}: {exc}") from None
    if args.config is not None:
        skeleton, path = resolve_config(args.config)
    elif "config" in chi_doc:
        skeleton, path = GateConfig.from_dict(chi_doc["config"]), f"{args.chi}#config"
    else:
        skeleton, path = load_config("ideal"), "ideal"
    out = _prepare_out(args)
    write_manifest(out, args, path)
    payload, converged = run_fit(chi, skeleton, args.variant, args.free_ratio, out)
    params = ", ".join(f"{k} = {v:.6f}" for k, v in payload["params"].items())
    print(f"{params}  residual = {payload['residual']:.3e}  F_mod = {payload['fidelity_mean']:.4f}")
    if not converged:
        print("fit did not converge; best-so-far written", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


def cmd_report(args) -> int:
    cfg, path = _config_with_quality(args)
    out = _prepare_out(args)
    write_manifest(out, args, path)
    hom = run_hom(cfg, product_state("VV"), np.linspace(-600.0, 600.0, 121), out)
    ent = {lab: run_entangle(cfg, product_state(lab), args, out, tag=lab.replace("+", "p"))
           for lab in SHOWCASE_INPUTS}
    chi, qpt_summary = run_qpt(cfg, args, out)
    fit_q, ok_q = run_fit(chi, cfg, "quality", False, out, "fit_result.json")
    fit_d, ok_d = run_fit(chi, cfg, "depolarization", False, out, "fit_result_depolarization.json")
    rows = {
        "hom_visibility": hom["visibility"],
        "overlap_quality": hom["overlap_quality"],
        "fidelity_L+": ent["L+"]["fidelity"],
        "fidelity_min": min(r["fidelity"] for r in ent.values()),
        "log_negativity_L+": ent["L+"]["log_negativity"],
        "log_negativity_min": min(r["log_negativity"] for r in ent.values()),
        "process_fidelity": qpt_summary["process_fidelity"],
        "fitted_quality": fit_q["params"]["quality"],
        "model_fidelity_mean": fit_q["fidelity_mean"],
        "model_fidelity_std": fit_q["fidelity_std"],
    }
    comparison = {k: {"simulated": v, "experiment": EXPERIMENT_REFERENCE[k]} for k, v in rows.items()}
    io.write_json(out / "report.json", _payload(
        comparison=comparison,
        depolarization_fit=fit_d["params"],
        showcase_chsh=[lab for lab, r in ent.items() if r["chsh_violated"]],
    ))
    width = max(len(k) for k in rows)
    print(f"{'quantity':<{width}}  simulated  experiment")
    for k, v in comparison.items():
        print(f"{k:<{width}}  {v['simulated']:9.4f}  {v['experiment']:9.4f}")
    return 0 if (ok_q and ok_d) else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--noiseless", action="store_true", help="skip Poisson sampling")
    common.add_argument("--pairs", type=int, default=4000, help="incident pairs per analyzer setting")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--config", default="ideal",
                     help=f"preset {PRESETS}, JSON path, or a name in ${CONFIG_DIR_ENV}")
    sim.add_argument("--quality", type=float, default=None, help="override the config's Q'")

    parser = argparse.ArgumentParser(prog="cphase", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hom", parents=[common, sim], help="HOM dip scan")
    p.add_argument("--input", default="VV", help="input state label or amplitudes")
    p.add_argument("--delay-min", type=float, default=-600.0)
    p.add_argument("--delay-max", type=float, default=600.0)
    p.add_argument("--steps", type=int, default=121)
    p.set_defaults(func=cmd_hom)

    p = sub.add_parser("entangle", parents=[common, sim], help="state tomography of one gate output")
    p.add_argument("--state", default="L+", help="showcase label (++, +L, L+, LL), any product label, or amplitudes")
    p.add_argument("--resamples", type=int, default=1000, help="Monte Carlo resamples for error bars")
    p.set_defaults(func=cmd_entangle)

    p = sub.add_parser("qpt", parents=[common, sim], help="16-input process tomography")
    p.set_defaults(func=cmd_qpt)

    p = sub.add_parser("fit", parents=[common], help="fit the interference model to a χ file")
    p.add_argument("--chi", required=True, help="chi.json written by `cphase qpt`")
    p.add_argument("--variant", choices=("quality", "depolarization"), default="quality")
    p.add_argument("--free-ratio", action="store_true", help="also free the V splitting ratio")
    p.add_argument("--config", default=None, help="model skeleton config (default: the one stored in the χ file)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", parents=[common, sim], help="full pipeline with experiment comparison")
    p.add_argument("--resamples", type=int, default=200)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "pairs", 1) <= 0:
        parser.error("--pairs must be positive")
    try:
        return args.func(args)
    except (UsageError, InvalidInputError) as exc:
        print(f"cphase: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CPhaseError as exc:
        print(f"cphase: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"cphase: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
