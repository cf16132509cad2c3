"""Command-line interface: fit, diagnose, simulate, and reproduce runs.

Exit codes: 0 on success, 2 for input or configuration errors, 3 for
numerical failures raised while computing.  All floating-point values in
CSV output are written with 17 significant digits; NaN becomes "NA".
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import replace
from importlib import resources

import numpy as np

from .data import (
    load_design_csv,
    load_response_csv,
    make_dataset,
    sign_pattern,
    standardize,
    support_of,
    to_original_coords,
    write_matrix_csv,
)
from .diagnostics import assumption2_report, design_constants
from .errors import ConstantColumnError, SpecMismatchError, TwoStepError
from .features import expand_features, expansion_spec_from_dict
from .initial import InitialEstimate, fit_ridge
from .numerics import eigh
from .selectors import (
    MethodSpec,
    fit_at,
    fit_initial,
    fit_path,
    kkt_residual,
    objective_value,
    parse_method,
    select_lambda_cv,
)
from .simulate import (
    config_from_dict,
    config_to_dict,
    run_prediction_experiment,
    run_selection_experiment,
    scale_config,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _fmt(value) -> str:
    value = float(value)
    if math.isnan(value):
        return "NA"
    return "%.17g" % value


def _json_safe(obj):
    if isinstance(obj, float) and math.isnan(obj):
        return None
    if isinstance(obj, dict):
        return {key: _json_safe(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(val) for val in obj]
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    return obj


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path, payload) -> None:
    text = json.dumps(_json_safe(payload), indent=2, allow_nan=False)
    if path is None:
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _workers(flag_value) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get("TWOSTEP_WORKERS")
    return int(env) if env else 1


def _load_config(path: str):
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def _bundled_config(name: str):
    text = (resources.files("twostep") / "configs" / name).read_text()
    return config_from_dict(json.loads(text))


def _method_spec(args):
    """Combine --method and --init; --method also accepts full labels."""
    label = args.method.strip().lower()
    if "-" in label or label == "lasso":
        spec = parse_method(label)
        if args.init is not None and args.init != spec.initial:
            raise SpecMismatchError("--init contradicts the --method label")
    elif args.init_coefs is not None:
        spec = MethodSpec(label, "user")
    elif args.init is not None:
        spec = MethodSpec(label, args.init)
    else:
        raise SpecMismatchError(f"--method {label} needs --init or --init-coefs")
    if spec.selector == "alasso" and args.gamma != 1.0:
        spec = replace(spec, gamma=args.gamma)
    return spec


def cmd_fit(args) -> int:
    """Fit one method to a design/response pair and print a JSON report."""
    design, _ = load_design_csv(args.design)
    response = load_response_csv(args.response)
    raw = make_dataset(design, response)
    spec = _method_spec(args)
    ds = raw if args.no_standardize else standardize(raw)

    started = time.perf_counter()
    init = None
    nu = None
    if spec.initial == "user":
        coefs = load_response_csv(args.init_coefs)
        if coefs.shape[0] != ds.p:
            raise SpecMismatchError(
                f"--init-coefs has {coefs.shape[0]} entries for {ds.p} columns"
            )
        init = InitialEstimate(coefs, "user")
    elif spec.selector != "lasso":
        if args.nu is not None:
            if spec.initial != "ridge":
                raise SpecMismatchError("--nu only applies to ridge initials")
            init = fit_ridge(ds, args.nu)
            nu = float(args.nu)
        else:
            init = fit_initial(ds, spec.initial, seed=[args.seed, 1])
            if spec.initial == "ridge":
                nu = float(init.tuning)

    lam_text = str(args.lam)
    if lam_text.startswith("cv"):
        if args.nu is not None:
            raise SpecMismatchError("--nu requires a numeric --lambda")
        if spec.initial == "user":
            raise SpecMismatchError("--init-coefs requires a numeric --lambda")
        folds = int(lam_text[2:] or 5)
        lam, beta = select_lambda_cv(ds, spec, k=folds, seed=args.seed)
    else:
        lam = float(lam_text)
        if lam < 0.0:
            raise ValueError("--lambda must be nonnegative")
        beta, init = fit_at(ds, spec, lam, init=init)
    wall = time.perf_counter() - started

    if args.standardized_output or args.no_standardize:
        coefs, intercept = beta, 0.0
        coords = "given" if args.no_standardize else "standardized"
    else:
        coefs, intercept = to_original_coords(ds.standardization, beta)
        coords = "original"
    report = {
        "method": spec.label,
        "selector": spec.selector,
        "initial": spec.initial,
        "tuning": {
            "lambda": lam,
            "gamma": spec.gamma if spec.selector == "alasso" else None,
            "nu": nu,
        },
        "coordinates": coords,
        "coefficients": [float(c) for c in coefs],
        "intercept": float(intercept),
        "support": [int(j) for j in support_of(beta)],
        "signs": [int(s) for s in sign_pattern(beta)],
        "objective": objective_value(ds, spec, lam, beta, init),
        "kkt_residual": kkt_residual(ds, spec, lam, beta, init),
        "wall_time_s": wall,
    }
    _write_json(args.out, report)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    """Report the Gram spectrum and, given true coefficients, the design
    constants that govern sign recovery."""
    design, _ = load_design_csv(args.design)
    raw = make_dataset(design, np.zeros(design.shape[0]))
    ds = standardize(raw) if args.standardize else raw
    decomp = eigh((ds.x.T @ ds.x) / ds.n)
    report = {
        "n": ds.n,
        "p": ds.p,
        "rank": decomp.rank,
        "spectrum": [float(v) for v in decomp.eigenvalues],
    }
    if args.beta is None:
        if args.full:
            raise SpecMismatchError("--full requires --beta")
        _write_json(args.out, report)
        return EXIT_OK

    beta_star = load_response_csv(args.beta)
    if beta_star.shape[0] != ds.p:
        raise SpecMismatchError(
            f"--beta has {beta_star.shape[0]} entries; the design has {ds.p} columns"
        )
    support = np.flatnonzero(beta_star != 0.0)
    if support.size == 0:
        raise SpecMismatchError("--beta has no nonzero entries")
    constants = design_constants(ds, support, beta_star=beta_star)
    a2 = assumption2_report(ds, beta_star)
    report.update(
        {
            "support_size": int(support.size),
            "eta_inf": constants.eta_inf,
            "c_max": constants.c_max,
            "lambda_min": constants.lambda_min,
            "rho_n": constants.rho_n,
            "row_norm": constants.row_norm,
            "assumption2": {
                "q": a2.q,
                "xi_hat": a2.xi_hat,
                "singular_values": [float(v) for v in a2.singular_values],
            },
        }
    )
    _write_json(args.out, report)
    return EXIT_OK


def cmd_expand(args) -> int:
    """Expand a design with squares and pairwise interactions."""
    values, names = load_design_csv(args.input)
    with open(args.spec) as fh:
        spec = expansion_spec_from_dict(json.load(fh))
    matrix, out_names = expand_features(values, names, spec)
    write_matrix_csv(args.out, matrix, out_names)
    print(f"wrote {matrix.shape[0]} x {matrix.shape[1]} design to {args.out}")
    return EXIT_OK


def _expand_s_grid(cfg):
    if not cfg.s_grid:
        return [cfg]
    out = []
    for s in cfg.s_grid:
        sub = replace(cfg, s=s, s_grid=())
        sub.validate()
        out.append(sub)
    return out


def _selection_rows(records, s):
    for rec in records:
        yield [
            str(s),
            str(rec.design),
            rec.method,
            _fmt(rec.eta_inf),
            _fmt(rec.success_rate),
            str(rec.failures),
        ]


def _selection_cells(cfg, records):
    cells = []
    for spec in cfg.methods:
        rates = np.asarray(
            [r.success_rate for r in records if r.method == spec.label]
        )
        valid = rates[~np.isnan(rates)]
        cells.append(
            {
                "s": cfg.s,
                "method": spec.label,
                "mean_success_rate": float(valid.mean()) if valid.size else math.nan,
                "designs": int(rates.size),
                "designs_na": int(rates.size - valid.size),
                "failures": int(
                    sum(r.failures for r in records if r.method == spec.label)
                ),
            }
        )
    return cells


def cmd_simulate(args) -> int:
    """Run a Monte Carlo configuration and write results plus a summary."""
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.scale != 1.0:
        cfg = scale_config(cfg, args.scale)
    workers = _workers(args.workers)
    out = args.out or cfg.name

    summary = {"config": config_to_dict(cfg), "mode": cfg.mode, "workers": workers}
    if cfg.mode == "selection":
        rows, cells = [], []
        for sub in _expand_s_grid(cfg):
            records = run_selection_experiment(sub, workers=workers)
            rows.extend(_selection_rows(records, sub.s))
            cells.extend(_selection_cells(sub, records))
        _write_csv(
            out + "_results.csv",
            ["s", "design", "method", "eta_inf", "success_rate", "failures"],
            rows,
        )
        summary["cells"] = cells
    else:
        records, methods = run_prediction_experiment(cfg, workers=workers)
        for spec in cfg.methods:
            methods[spec.label]["failures"] = int(
                sum(r.failures for r in records if r.method == spec.label)
            )
        _write_csv(
            out + "_results.csv",
            ["rep", "method", "rpe", "tp", "fp", "failures"],
            [
                [
                    str(r.design),
                    r.method,
                    _fmt(r.rpe),
                    _fmt(r.tp),
                    _fmt(r.fp),
                    str(r.failures),
                ]
                for r in records
            ],
        )
        summary["methods"] = methods
    _write_json(out + "_summary.json", summary)
    print(f"wrote {out}_results.csv and {out}_summary.json")
    return EXIT_OK


def cmd_sweep(args) -> int:
    """Mean held-out MSE as a function of selected support size.

    Each path penalty is mapped to the sparsity level with the nearest
    support size, ties resolved toward the smaller penalty; the mapping
    is recorded in the sidecar metadata file.
    """
    design, _ = load_design_csv(args.design)
    response = load_response_csv(args.response)
    raw = make_dataset(design, response)
    n = raw.n
    spec = parse_method(args.method)
    train_size = args.train_size or n // 2
    if not 2 <= train_size < n:
        raise SpecMismatchError("--train-size must satisfy 2 <= t < n")
    max_k = args.max_sparsity or min(raw.p, train_size - 1)
    if not 1 <= max_k <= raw.p:
        raise SpecMismatchError("--max-sparsity must lie in [1, p]")

    mse = np.zeros(max_k)
    sizes_sum = np.zeros(max_k)
    for split in range(args.splits):
        rng = np.random.default_rng([args.seed, split])
        order = rng.permutation(n)
        tr, te = order[:train_size], order[train_size:]
        ds = standardize(make_dataset(raw.x[tr], raw.y[tr]))
        path, _ = fit_path(ds, spec, seed=[args.seed, split, 1])
        support_sizes = np.asarray([sup.size for sup in path.supports])
        for k in range(1, max_k + 1):
            gaps = np.abs(support_sizes - k)
            idx = len(gaps) - 1 - int(np.argmin(gaps[::-1]))
            beta, intercept = to_original_coords(
                ds.standardization, path.coefficients[idx]
            )
            pred = raw.x[te] @ beta + intercept
            mse[k - 1] += float(np.mean((raw.y[te] - pred) ** 2))
            sizes_sum[k - 1] += support_sizes[idx]
    mse /= args.splits
    sizes_sum /= args.splits

    _write_csv(
        args.out,
        ["sparsity", "mean_mse", "mean_support_size"],
        [
            [str(k + 1), _fmt(mse[k]), _fmt(sizes_sum[k])]
            for k in range(max_k)
        ],
    )
    _write_json(
        args.out + ".meta.json",
        {
            "method": spec.label,
            "splits": args.splits,
            "train_size": train_size,
            "seed": args.seed,
            "penalty_mapping": "nearest support size, ties toward smaller penalty",
        },
    )
    print(f"wrote {args.out}")
    return EXIT_OK


def _reproduce_figure1(cfg, workers, out) -> None:
    records = run_selection_experiment(cfg, workers=workers)
    _write_csv(
        out + ".csv",
        ["eta_inf", "method", "success_rate"],
        [
            [_fmt(r.eta_inf), r.method, _fmt(r.success_rate)]
            for r in records
        ],
    )


def _reproduce_table1(configs, workers, out) -> None:
    rows = []
    for cfg in configs:
        for sub in _expand_s_grid(cfg):
            records = run_selection_experiment(sub, workers=workers)
            for cell in _selection_cells(sub, records):
                rows.append(
                    [
                        str(sub.p),
                        str(sub.s),
                        cell["method"],
                        _fmt(cell["mean_success_rate"]),
                    ]
                )
    _write_csv(out + ".csv", ["p", "s", "method", "success_rate"], rows)


def _reproduce_prediction(configs, workers, out, columns) -> None:
    rows = []
    for idx, cfg in enumerate(configs, start=1):
        cov = cfg.covariance
        param = {"ar": cov.rho, "constant": cov.r}.get(cov.kind, cov.a)
        _, summary = run_prediction_experiment(cfg, workers=workers)
        for spec in cfg.methods:
            entry = summary[spec.label]
            rows.append(
                [f"example{idx}", _fmt(param), spec.label]
                + [_fmt(entry[c]) for c in columns]
            )
    _write_csv(out + ".csv", ["example", "cov_param", "method"] + columns, rows)


def cmd_reproduce(args) -> int:
    """Re-run one of the bundled study configurations at a chosen scale."""
    names = {
        "figure1": ["figure1.json"],
        "table1": ["table1_p16.json", "table1_p64.json"],
        "table2": ["example1.json", "example2.json", "example3.json"],
        "table3": ["example1.json", "example2.json", "example3.json"],
    }[args.target]
    configs = []
    for name in names:
        cfg = _bundled_config(name)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.scale != 1.0:
            cfg = scale_config(cfg, args.scale)
        configs.append(cfg)
    workers = _workers(args.workers)
    out = args.out or args.target

    if args.target == "figure1":
        _reproduce_figure1(configs[0], workers, out)
    elif args.target == "table1":
        _reproduce_table1(configs, workers, out)
    elif args.target == "table2":
        _reproduce_prediction(configs, workers, out, ["rpe_median", "rpe_se"])
    else:
        _reproduce_prediction(configs, workers, out, ["tp_median", "fp_median"])
    print(f"wrote {out}.csv")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twostep",
        description="Two-step variable selection for sparse linear models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one selection method to CSV data")
    p.add_argument("--design", required=True, help="design matrix CSV with header")
    p.add_argument("--response", required=True, help="single-column response CSV")
    p.add_argument(
        "--method",
        required=True,
        help='selector ("lasso", "garrote", "alasso", "ht") or a full label '
        'like "alasso-ridge"',
    )
    p.add_argument(
        "--init",
        default=None,
        choices=["ols", "univariate", "ridge", "lasso"],
        help="first-stage estimator for two-step methods",
    )
    p.add_argument(
        "--init-coefs",
        default=None,
        help="CSV with a fixed initial coefficient vector (needs numeric --lambda)",
    )
    p.add_argument(
        "--lambda",
        dest="lam",
        default="cv5",
        help='penalty value, or "cv<k>" for k-fold cross-validation',
    )
    p.add_argument("--gamma", type=float, default=1.0, help="adaptive Lasso exponent")
    p.add_argument(
        "--nu", type=float, default=None, help="fixed ridge penalty, skipping GCV"
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--no-standardize",
        action="store_true",
        help="fit in the given coordinates without centering or scaling",
    )
    p.add_argument(
        "--standardized-output",
        action="store_true",
        help="report coefficients in standardized coordinates",
    )
    p.add_argument("--out", default=None, help="report path (default: stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("diagnose", help="design spectrum and recovery constants")
    p.add_argument("--design", required=True)
    p.add_argument(
        "--beta", default=None, help="true coefficients CSV; enables eta_inf etc."
    )
    p.add_argument(
        "--full", action="store_true", help="fail unless --beta was supplied"
    )
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("expand-features", help="add squares and interactions")
    p.add_argument("--input", required=True)
    p.add_argument("--spec", required=True, help="JSON listing continuous/binary columns")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("simulate", help="run a Monte Carlo config JSON")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--scale", type=float, default=1.0, help="replication scale factor")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None, help="output prefix (default: config name)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="held-out MSE by selected support size")
    p.add_argument("--design", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--method", default="lasso")
    p.add_argument("--splits", type=int, default=20)
    p.add_argument("--train-size", type=int, default=None)
    p.add_argument("--max-sparsity", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("reproduce", help="re-run a bundled study configuration")
    p.add_argument("target", choices=["figure1", "table1", "table2", "table3"])
    p.add_argument("--scale", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SpecMismatchError, ConstantColumnError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TwoStepError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
