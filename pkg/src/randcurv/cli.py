"""Command-line experiment runner.

randcurv <sample|p2|euler|linf|heat|bounds|qsign> --config FILE
         [--seed N] [--workers N] [--out DIR]

Each command reads its section of the config file, runs the matching
estimators and bound evaluators, and writes CSV tables plus one JSON run
summary into the output directory.  Every artifact embeds the config hash;
identical config and seed reproduce identical CSV bytes at any worker count.
"""

from __future__ import annotations

import argparse
import datetime
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds
from .config import (
    ExperimentConfig,
    canonical_text,
    config_hash,
    load_config,
    parse_grid,
)
from .curvature import DeviationMode, q_round_s4, scalar_curvature_2d
from .excursion import (
    at_metric_constant,
    estimate_linf,
    euler_curve,
    p2_curve,
    sphere_p2_prediction,
)
from .fields import (
    FieldKind,
    RandomFieldSpec,
    level_weights,
    make_sampler,
    variance_summary,
)
from .grids import fibonacci_sphere, icosphere, torus_grid
from .reports import RunRecord, write_csv, write_run_json
from .spectral import (
    Indexing,
    make_explicit,
    make_heat_kernel,
    make_power_law,
    make_sphere_normalized,
    s4_paneitz_spectrum,
    sphere2_spectrum,
    torus2_spectrum,
)

SPHERE2_VOLUME = 4.0 * math.pi


def _build_spectrum(cfg: ExperimentConfig):
    if cfg.geometry == "sphere":
        return sphere2_spectrum(cfg.truncation)
    if cfg.geometry == "torus":
        return torus2_spectrum(cfg.truncation)
    return s4_paneitz_spectrum(cfg.truncation)


def _build_scheme(cfg: ExperimentConfig, model):
    if cfg.scheme == "normalized":
        return make_sphere_normalized(cfg.s, cfg.truncation)
    if cfg.scheme == "power":
        return make_power_law(cfg.s, model, cfg.truncation)
    if cfg.scheme == "heat":
        return make_heat_kernel(cfg.heat_time, model, cfg.truncation)
    if len(cfg.values) > cfg.truncation:
        raise ValueError("explicit values list exceeds the spectrum truncation")
    return make_explicit(cfg.values, indexing=Indexing(cfg.indexing))


def _build_grid(cfg: ExperimentConfig):
    kind, size = parse_grid(cfg.grid)
    if cfg.geometry == "torus" and kind != "torus":
        raise ValueError("torus geometry needs a torus:<n> grid")
    if cfg.geometry == "sphere" and kind == "torus":
        raise ValueError("sphere geometry needs a fibonacci:<n> or icosphere:<depth> grid")
    if kind == "fibonacci":
        return fibonacci_sphere(size)
    if kind == "icosphere":
        return icosphere(size)
    return torus_grid(size)


def _require_sampled_geometry(cfg: ExperimentConfig) -> None:
    if cfg.geometry == "s4":
        raise ValueError(
            f"{cfg.command} needs a pointwise sampler; the 4-sphere model is "
            "spectrum-only (use qsign or bounds for it)"
        )


def _base_metadata(cfg: ExperimentConfig) -> dict:
    return {
        "config_hash": config_hash(cfg),
        "command": cfg.command,
        "version": __version__,
        "geometry": cfg.geometry,
        "scheme": cfg.scheme,
        "truncation": cfg.truncation,
        "seed": cfg.seed,
    }


def _artifact(cfg: ExperimentConfig, stem: str) -> Path:
    return Path(cfg.out) / f"{stem}_{config_hash(cfg)}.csv"


def _finish(cfg: ExperimentConfig, rows, artifacts) -> RunRecord:
    h = config_hash(cfg)
    record = RunRecord(
        command=cfg.command,
        config_hash=h,
        version=__version__,
        timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        config_text=canonical_text(cfg),
        artifacts=tuple(str(a) for a in artifacts),
        rows=tuple(rows),
    )
    json_path = write_run_json(Path(cfg.out) / f"{cfg.command}_{h}_run.json", record)
    return replace(record, artifacts=record.artifacts + (json_path,))


def cmd_sample(cfg: ExperimentConfig) -> RunRecord:
    _require_sampled_geometry(cfg)
    model = _build_spectrum(cfg)
    scheme = _build_scheme(cfg, model)
    grid = _build_grid(cfg)
    spec = RandomFieldSpec(model, scheme, FieldKind.H)
    sampler = make_sampler(spec, grid)
    if cfg.geometry == "sphere":
        coords = np.asarray(grid.xyz)
        coord_names = ["x", "y", "z"]
    else:
        coords = np.asarray(grid.points)
        coord_names = ["theta1", "theta2"]
    meta = _base_metadata(cfg)
    meta["amplitude"] = cfg.amplitude
    meta["reference"] = cfg.reference
    if cfg.geometry == "sphere":
        if scheme.normalization is not None:
            meta["normalization_k"] = scheme.normalization
        if scheme.indexing is Indexing.PER_EIGENSPACE:
            at_c = at_metric_constant(scheme)
            meta["at_constant"] = at_c
            meta["lk_l2"] = SPHERE2_VOLUME * at_c
        meta["sigma_h"] = math.sqrt(variance_summary(spec, grid).sigma2_sup)
    header = ["index", *coord_names, "f", "h", "R1"]
    artifacts = []
    rows = []
    h = config_hash(cfg)
    for j in range(cfg.n_samples):
        sample = sampler.sample(cfg.seed, j)
        curv = scalar_curvature_2d(cfg.reference, sample, cfg.amplitude)
        table = [
            [i, *coords[i], sample.values_f[i], sample.values_h[i], curv.values[i]]
            for i in range(sampler.n_points)
        ]
        path = Path(cfg.out) / f"sample_{h}_d{j:04d}.csv"
        artifacts.append(write_csv(path, {**meta, "draw_index": j}, header, table))
        rows.append(
            {
                "draw_index": j,
                "max_abs_f": float(np.abs(sample.values_f).max()),
                "max_abs_h": float(np.abs(sample.values_h).max()),
                "min_R1": float(curv.values.min()),
                "max_R1": float(curv.values.max()),
            }
        )
    return _finish(cfg, rows, artifacts)


def cmd_p2(cfg: ExperimentConfig) -> RunRecord:
    _require_sampled_geometry(cfg)
    model = _build_spectrum(cfg)
    scheme = _build_scheme(cfg, model)
    grid = _build_grid(cfg)
    spec = RandomFieldSpec(
        model, scheme, FieldKind.V, reference_curvature=cfg.reference
    )
    study = p2_curve(
        spec,
        list(cfg.amplitudes),
        grid,
        cfg.n_samples,
        cfg.seed,
        workers=cfg.workers,
        refine=cfg.refine,
    )
    sigma_v = study.sigma_v
    c2_upper = study.e_sup / sigma_v**2
    predictions = None
    if cfg.geometry == "sphere" and scheme.indexing is Indexing.PER_EIGENSPACE:
        predictions = [sphere_p2_prediction(scheme, a) for a in cfg.amplitudes]
    meta = _base_metadata(cfg)
    meta["n_samples"] = cfg.n_samples
    meta["sigma_v"] = sigma_v
    meta["e_sup_mc"] = study.e_sup
    meta["c2_upper"] = c2_upper
    if predictions is not None:
        meta["c1_prediction"] = predictions[0].c1
        meta["c2_prediction"] = predictions[0].c2
    header = [
        "a", "threshold", "estimate", "standard_error", "prediction",
        "lower", "upper", "refinement_delta", "warnings",
    ]
    table = []
    rows = []
    for i, report in enumerate(study.reports):
        a = report.amplitude
        lower = bounds.gaussian_tail(report.threshold / sigma_v)
        upper = bounds.p2_two_sided(a, sigma_v, 1.0, c2_upper)[1]
        prediction = None if predictions is None else predictions[i].value
        warnings = "" if predictions is None else "; ".join(predictions[i].warnings)
        table.append(
            [a, report.threshold, report.estimate, report.standard_error,
             prediction, lower, upper, report.refinement_delta, warnings]
        )
        rows.append(
            {
                "a": a,
                "threshold": report.threshold,
                "estimate": report.estimate,
                "standard_error": report.standard_error,
                "prediction": prediction,
                "lower": lower,
                "upper": upper,
                "refinement_delta": report.refinement_delta,
                "warnings": warnings,
            }
        )
    path = write_csv(_artifact(cfg, "p2"), meta, header, table)
    return _finish(cfg, rows, [path])


def cmd_euler(cfg: ExperimentConfig) -> RunRecord:
    if cfg.geometry != "sphere":
        raise ValueError("euler needs sphere geometry")
    if parse_grid(cfg.grid)[0] != "icosphere":
        raise ValueError("euler needs an icosphere:<depth> grid (triangulation)")
    model = _build_spectrum(cfg)
    scheme = _build_scheme(cfg, model)
    grid = _build_grid(cfg)
    spec = RandomFieldSpec(model, scheme, FieldKind.H)
    curve = euler_curve(
        spec, list(cfg.thresholds), cfg.n_samples, cfg.seed,
        grid=grid, workers=cfg.workers,
    )
    meta = _base_metadata(cfg)
    meta["n_samples"] = cfg.n_samples
    meta["at_constant"] = at_metric_constant(scheme)
    meta["lk_l0"], meta["lk_l1"], meta["lk_l2"] = curve.lipschitz_killing
    header = ["u", "empirical_mean", "standard_error", "predicted"]
    table = []
    rows = []
    for u, mean, se, predicted in zip(
        curve.thresholds, curve.empirical_mean, curve.empirical_se, curve.predicted
    ):
        table.append([float(u), float(mean), float(se), float(predicted)])
        rows.append(
            {
                "u": float(u),
                "empirical_mean": float(mean),
                "standard_error": float(se),
                "predicted": float(predicted),
            }
        )
    path = write_csv(_artifact(cfg, "euler"), meta, header, table)
    return _finish(cfg, rows, [path])


def cmd_linf(cfg: ExperimentConfig) -> RunRecord:
    _require_sampled_geometry(cfg)
    model = _build_spectrum(cfg)
    scheme = _build_scheme(cfg, model)
    grid = _build_grid(cfg)
    spec = RandomFieldSpec(
        model, scheme, FieldKind.H, reference_curvature=cfg.reference
    )
    w_spec = RandomFieldSpec(
        model, scheme, FieldKind.W, reference_curvature=cfg.reference
    )
    sigma_w = math.sqrt(variance_summary(w_spec, grid).sigma2_sup)
    meta = _base_metadata(cfg)
    meta["n_samples"] = cfg.n_samples
    meta["sigma_w"] = sigma_w
    header = [
        "u", "a", "u_over_a", "estimate", "standard_error",
        "log_estimate", "log_asymptote", "ratio", "regime_ok",
        "refinement_delta",
    ]
    table = []
    rows = []
    for a, u in zip(cfg.amplitudes, cfg.thresholds):
        report = estimate_linf(
            spec, a, u, grid, cfg.n_samples, cfg.seed,
            mode=DeviationMode.SCALAR_2D, workers=cfg.workers, refine=cfg.refine,
        )
        asymptote = bounds.linf_log_asymptote(u, a, sigma_w)
        log_estimate = math.log(report.estimate) if report.estimate > 0 else None
        ratio = None if log_estimate is None else log_estimate / asymptote
        regime = bounds.linf_regime_ok(u, a)
        table.append(
            [u, a, u / a, report.estimate, report.standard_error,
             log_estimate, asymptote, ratio, regime, report.refinement_delta]
        )
        rows.append(
            {
                "u": u,
                "a": a,
                "u_over_a": u / a,
                "estimate": report.estimate,
                "standard_error": report.standard_error,
                "log_estimate": log_estimate,
                "log_asymptote": asymptote,
                "ratio": ratio,
                "regime_ok": regime,
                "refinement_delta": report.refinement_delta,
            }
        )
    path = write_csv(_artifact(cfg, "linf"), meta, header, table)
    return _finish(cfg, rows, [path])


def cmd_heat(cfg: ExperimentConfig) -> RunRecord:
    from .fields import heat_variance

    model = _build_spectrum(cfg)
    r0_sq = cfg.reference**2
    meta = _base_metadata(cfg)
    meta["reference"] = cfg.reference
    meta["lambda1"] = float(model.eigenvalues[0])
    meta["dimension"] = model.dimension
    header = [
        "T", "sigma2_v", "small_T_value", "small_T_ratio",
        "large_T_F", "large_T_asymptote", "large_T_ratio",
    ]
    table = []
    rows = []
    for T in cfg.t_values:
        sigma2 = heat_variance(model, T).sup / r0_sq
        small = bounds.heat_sigma_small_T(T, model.dimension, r0_sq)
        F, asymptote = bounds.heat_sigma_large_T(
            model, np.array([cfg.reference]), T
        )
        table.append(
            [T, sigma2, small, sigma2 / small, F, asymptote, sigma2 / asymptote]
        )
        rows.append(
            {
                "T": T,
                "sigma2_v": sigma2,
                "small_T_value": small,
                "small_T_ratio": sigma2 / small,
                "large_T_F": F,
                "large_T_asymptote": asymptote,
                "large_T_ratio": sigma2 / asymptote,
            }
        )
    path = write_csv(_artifact(cfg, "heat"), meta, header, table)
    return _finish(cfg, rows, [path])


def cmd_bounds(cfg: ExperimentConfig) -> RunRecord:
    n, sv, s2 = cfg.n_dim, cfg.sigma_v, cfg.sigma_2
    kappa, delta0, B = bounds.nd_positive_constants(n, sv, s2)
    quad_residual = delta0**2 + kappa * delta0 - kappa
    expo_neg = delta0**2 / (2.0 * (n - 1.0) ** 2 * sv**2)
    expo_pos = 2.0 * (1.0 - delta0) / (s2 * n * (n - 1.0) * (n - 2.0))
    negative = bounds.nd_negative_bound(cfg.amplitude, n, sv, cfg.alpha)
    meta = _base_metadata(cfg)

    constants_header = [
        "kind", "n", "sigma_v", "sigma_2", "alpha", "a",
        "kappa", "delta0", "B", "quadratic_residual",
        "exponent_neg_minus_B", "exponent_pos_minus_B", "value",
    ]
    constants_rows = [
        ["nd_positive", n, sv, s2, None, None, kappa, delta0, B,
         quad_residual, expo_neg - B, expo_pos - B, None],
        ["nd_negative", n, sv, None, cfg.alpha, cfg.amplitude,
         None, None, None, None, None, None, negative],
    ]
    constants_path = write_csv(
        _artifact(cfg, "bounds_constants"), meta, constants_header, constants_rows
    )

    compare_header = ["regime", "input_a", "input_b", "larger_p2"]
    compare_rows = [
        ["small_T", *cfg.r0sq_pair, bounds.compare_small_T(*cfg.r0sq_pair).value],
        ["large_T", *cfg.lambda1_pair, bounds.compare_large_T(*cfg.lambda1_pair).value],
    ]
    compare_path = write_csv(
        _artifact(cfg, "bounds_compare"), meta, compare_header, compare_rows
    )

    limits_header = ["a", "lower", "upper", "a2_log_lower", "a2_log_upper", "limit"]
    limits_rows = []
    for a in (0.1, 0.01, 0.001):
        lower, upper = bounds.p2_two_sided(a, sv, 1.0, 1.0)
        lo_diag, up_diag, limit = bounds.p2_log_diagnostics(a, sv, 1.0, 1.0)
        limits_rows.append([a, lower, upper, lo_diag, up_diag, limit])
    limits_path = write_csv(
        _artifact(cfg, "bounds_limits"), meta, limits_header, limits_rows
    )

    rows = (
        [dict(zip(constants_header, r)) for r in constants_rows]
        + [dict(zip(compare_header, r)) for r in compare_rows]
        + [dict(zip(limits_header, r)) for r in limits_rows]
    )
    return _finish(cfg, rows, [constants_path, compare_path, limits_path])


def cmd_qsign(cfg: ExperimentConfig) -> RunRecord:
    if cfg.geometry != "s4":
        raise ValueError("qsign runs on the round 4-sphere model (geometry = s4)")
    model = _build_spectrum(cfg)
    scheme = _build_scheme(cfg, model)
    h_spec = RandomFieldSpec(model, scheme, FieldKind.H)
    weights = level_weights(h_spec)
    M = scheme.truncation
    var_h = float(
        np.sum(weights.beta**2 * model.multiplicities[:M]) / model.volume
    )
    sigma_v = math.sqrt(var_h) / abs(cfg.reference)
    meta = _base_metadata(cfg)
    meta["q0"] = cfg.reference
    meta["q0_round_derived"] = q_round_s4()
    meta["lambda1"] = float(model.eigenvalues[0])
    meta["multiplicity1"] = int(model.multiplicities[0])
    meta["sigma_v"] = sigma_v
    header = ["a", "lower", "upper", "a2_log_lower", "a2_log_upper", "limit"]
    table = []
    rows = []
    for a in cfg.amplitudes:
        lower, upper = bounds.q_sign_bounds(a, sigma_v)
        lo_diag, up_diag, limit = bounds.p2_log_diagnostics(a, sigma_v, 1.0, 1.0)
        table.append([a, lower, upper, lo_diag, up_diag, limit])
        rows.append(
            {
                "a": a,
                "lower": lower,
                "upper": upper,
                "a2_log_lower": lo_diag,
                "a2_log_upper": up_diag,
                "limit": limit,
            }
        )
    path = write_csv(_artifact(cfg, "qsign"), meta, header, table)
    return _finish(cfg, rows, [path])


_DISPATCH = {
    "sample": cmd_sample,
    "p2": cmd_p2,
    "euler": cmd_euler,
    "linf": cmd_linf,
    "heat": cmd_heat,
    "bounds": cmd_bounds,
    "qsign": cmd_qsign,
}

_HELP = {
    "sample": "write per-sample grids of f, h, and the transformed curvature",
    "p2": "Monte Carlo sign-change probabilities joined with bounds and the asymptotic",
    "euler": "empirical vs predicted Euler characteristic curve on the sphere",
    "linf": "sup-norm deviation exceedance probabilities vs the log-asymptote",
    "heat": "heat-kernel variance sweep with both asymptote ratios",
    "bounds": "pure-theory constants, comparisons, and limit diagnostics",
    "qsign": "fourth-order curvature sign-change bounds on the round 4-sphere",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randcurv",
        description="Random conformal perturbation experiments",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in _HELP.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="INI-style experiment file")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--workers", type=int, default=None)
        cmd.add_argument("--out", default=None, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(
            args.command, args.config,
            seed=args.seed, workers=args.workers, out=args.out,
        )
        record = _DISPATCH[args.command](cfg)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    for artifact in record.artifacts:
        print(artifact)
    return 0


if __name__ == "__main__":
    sys.exit(main())
