"""Command-line front end.

Exit codes: 0 success, 2 input or configuration error, 3 numerical error,
4 internal error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from pathlib import Path

import numpy as np

from . import evaluate, groupfit, io, simulation
from .errors import ConfigError, InputError, NumericalError, RFAError
from .partition import Partition

MAX_HORIZON = 12


def _num_factors(value: str):
    if value in ("auto-ic", "auto-er"):
        return value
    try:
        k = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected an integer, auto-ic or auto-er") from None
    if k < 1:
        raise argparse.ArgumentTypeError("number of factors must be >= 1")
    return k


def _scenario(value: str):
    try:
        parts = tuple(int(v) for v in value.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("scenario must look like 30,30,30") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("scenario needs three group sizes")
    return parts


def _horizons(value: str) -> int:
    """``4`` or ``1,2,3,4``; horizons must be ``1..h`` for some ``h <= 12``."""
    try:
        hs = [int(v) for v in value.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError("horizons must be integers") from None
    h = max(hs) if len(hs) > 1 else hs[0]
    if len(hs) > 1 and hs != list(range(1, h + 1)):
        raise argparse.ArgumentTypeError("horizon list must be 1,2,...,h")
    if not 1 <= h <= MAX_HORIZON:
        raise argparse.ArgumentTypeError(f"horizons must lie in 1..{MAX_HORIZON}")
    return h


def _methods(value: str):
    return ("rts", "pca") if value == "both" else (value,)


def _common_fit_args(p):
    p.add_argument("--num-factors", type=_num_factors, default="auto-ic",
                   help="integer, auto-ic (Bai-Ng IC2) or auto-er (eigenvalue ratio)")
    p.add_argument("--m-max", type=int, default=None)
    p.add_argument("--k-bar", type=int, default=None)
    p.add_argument("--rho", default="paper", help="paper, literal or fixed:<x>")
    p.add_argument("--out", type=Path, default=Path("rfa_out"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfa", description="Robust factor analysis with latent loading groups.")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a panel CSV")
    fit.add_argument("--input", type=Path, required=True)
    fit.add_argument("--method", choices=["rts", "pca", "both"], default="rts")
    fit.add_argument("--standardize", action="store_true")
    fit.add_argument("--kendall-dump", type=Path)
    fit.add_argument("--dendrogram-dump", type=Path)
    _common_fit_args(fit)

    fc = sub.add_parser("forecast", help="VAR forecast comparison on a panel CSV")
    fc.add_argument("--input", type=Path, required=True)
    fc.add_argument("--standardize", action="store_true")
    fc.add_argument("--var-order", type=int, default=3)
    fc.add_argument("--horizons", type=_horizons, default=4)
    fc.add_argument("--forecast-factors", choices=["rts", "refit"], default="rts")
    _common_fit_args(fc)

    sim = sub.add_parser("simulate", help="Monte Carlo replications of a design")
    sim.add_argument("--config", type=Path, help="INI file with a [simulation] section")
    sim.add_argument("--design", choices=[simulation.EXAMPLE1, simulation.EXAMPLE2])
    sim.add_argument("--n", type=int)
    sim.add_argument("--t", type=int)
    sim.add_argument("--delta", type=float)
    sim.add_argument("--kappa", type=float)
    sim.add_argument("--scenario", type=_scenario)
    sim.add_argument("--skew", action="store_true", default=None,
                     help="skewed t errors (example1)")
    sim.add_argument("--num-factors", type=_num_factors)
    sim.add_argument("--m-max", type=int)
    sim.add_argument("--k-bar", type=int)
    sim.add_argument("--method", choices=["rts", "pca", "both"])
    sim.add_argument("--rho")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--reps", type=int)
    sim.add_argument("--workers", type=int, default=None)
    sim.add_argument("--timings", action="store_true", help="add a wall_time column")
    sim.add_argument("--export-panels", action="store_true",
                     help="write each simulated panel to <out>/panels/")
    sim.add_argument("--out", type=Path, default=Path("rfa_sim"))

    met = sub.add_parser("metrics", help="NMI and purity between two labelings")
    met.add_argument("--truth", type=Path, required=True)
    met.add_argument("--estimate", type=Path, required=True)
    met.add_argument("--out", type=Path)
    return parser


# ---------------------------------------------------------------- fit


def _load(args):
    y, names = io.load_panel_csv(args.input)
    if args.standardize:
        y = io.standardize(y, names)
    return y, names


def result_document(res: groupfit.RFAResult, method: str, names, factors_file: str) -> dict:
    grouped = res.grouped
    return {
        "method": method,
        "m": res.initial.num_factors,
        "m_selection": res.m_selection,
        "K_hat": res.ic.k_hat,
        "k_bar": res.ic.k_bar,
        "ic_curve": res.ic.as_records(),
        "units": list(names),
        "partition": grouped.partition.labels.tolist(),
        "group_sizes": grouped.partition.sizes.tolist(),
        "S": grouped.s_value,
        "initial_loadings": res.initial.loadings,
        "grouped_loadings": grouped.grouped_loadings,
        "factors_file": factors_file,
    }


def _fit_one(y, args, method, kendall=None, m=None):
    rho = simulation.parse_rho(args.rho)
    return groupfit.rfa_pipeline(y, args.num_factors if m is None else m, args.k_bar,
                                 method=method, m_max=args.m_max, rho=rho, kendall=kendall)


def run_fit(args) -> int:
    y, names = _load(args)
    out = args.out
    methods = _methods(args.method)
    results = {}
    for method in methods:
        res = _fit_one(y, args, method)
        results[method] = res
        m = res.initial.num_factors
        fcols = [f"f{k}" for k in range(1, m + 1)]
        io.write_matrix_csv(out / f"factors_initial_{method}.csv", res.initial.factors, fcols)
        io.write_matrix_csv(out / f"factors_refit_{method}.csv", res.grouped.refit_factors, fcols)
        lam_rows = [[n] + [io.fmt(v) for v in row] + [int(g)] for n, row, g in
                    zip(names, np.hstack([res.initial.loadings, res.grouped.grouped_loadings]),
                        res.grouped.partition.labels)]
        io.write_rows_csv(out / f"loadings_{method}.csv",
                          ["unit"] + [f"initial_{c}" for c in fcols]
                          + [f"grouped_{c}" for c in fcols] + ["group"], lam_rows)
        io.write_json(out / f"result_{method}.json",
                      result_document(res, method, names, f"factors_refit_{method}.csv"))
        if method == "rts" and args.kendall_dump:
            io.write_matrix_csv(args.kendall_dump, res.kendall.k, names)
        if args.dendrogram_dump and (method == methods[0]):
            path = res.path
            rows = [[a, b, float(h), c] for a, b, h, c in path.merges]
            io.write_rows_csv(args.dendrogram_dump, ["a", "b", "height", "new_id"], rows)
    for method, res in results.items():
        print(f"{method}: m={res.initial.num_factors} K_hat={res.ic.k_hat} "
              f"sizes={res.grouped.partition.sizes.tolist()}")
    return 0


# ---------------------------------------------------------------- forecast


def forecast_table(y, h_max: int, var_order: int = 3, forecast_factors: str = "rts",
                   num_factors="auto-ic", m_max=None, k_bar=None, rho="paper"):
    """Out-of-sample MSE of grouped and ungrouped loadings for each method.

    The model is fitted on all but the last ``h_max`` periods. Returns a dict
    mapping row labels such as ``"MSE-RTS_1"`` to arrays of length ``h_max``,
    and the fitted results per method.
    """
    y = np.asarray(y, dtype=float)
    T = y.shape[0]
    if T - h_max <= var_order or T - h_max < 2:
        raise InputError(
            f"need more than {h_max + var_order} periods for horizon {h_max} "
            f"and VAR order {var_order}, got {T}")
    train, hold = y[: T - h_max], y[T - h_max :]
    rho_fn = simulation.parse_rho(rho)
    table, fits = {}, {}
    for method in ("pca", "rts"):
        res = groupfit.rfa_pipeline(train, num_factors, k_bar, method=method, m_max=m_max,
                                    rho=rho_fn)
        f = res.initial.factors if forecast_factors == "rts" else res.grouped.refit_factors
        model = evaluate.fit_var(f, var_order)
        f_fc = evaluate.forecast_var(model, f, h_max)
        tag = method.upper()
        table[f"MSE-{tag}_0"] = evaluate.forecast_panel_mse(res.initial.loadings, f_fc, hold)
        table[f"MSE-{tag}_1"] = evaluate.forecast_panel_mse(res.grouped.grouped_loadings,
                                                            f_fc, hold)
        fits[method] = res
    return table, fits


def run_forecast(args) -> int:
    y, names = io.load_panel_csv(args.input)
    h = args.horizons
    if y.shape[0] - h <= args.var_order + 1:
        raise InputError(f"{args.input}: {y.shape[0]} periods leave too few for training "
                         f"with horizon {h} and VAR order {args.var_order}")
    if args.standardize:
        # statistics from the training window only
        train = y[: y.shape[0] - h]
        io.standardize(train, names)
        y = (y - train.mean(axis=0)) / train.std(axis=0, ddof=1)
    table, fits = forecast_table(y, h, args.var_order, args.forecast_factors,
                                 args.num_factors, args.m_max, args.k_bar, args.rho)
    rows = [[label] + [float(v) for v in values] for label, values in table.items()]
    io.write_rows_csv(args.out / "forecast_mse.csv",
                      ["row"] + [f"k{k}" for k in range(1, h + 1)], rows)
    io.write_json(args.out / "forecast.json", {
        "horizons": list(range(1, h + 1)),
        "var_order": args.var_order,
        "forecast_factors": args.forecast_factors,
        "mse": {k: v for k, v in table.items()},
        "K_hat": {m: r.ic.k_hat for m, r in fits.items()},
        "m": {m: r.initial.num_factors for m, r in fits.items()},
    })
    for label, values in table.items():
        print(label, " ".join(f"{v:.4f}" for v in values))
    return 0


# ---------------------------------------------------------------- simulate


_SIM_KEYS = {
    "design": str, "n": int, "t": int, "delta": float, "kappa": float,
    "scenario": _scenario, "skew": lambda v: v.strip().lower() in ("1", "true", "yes", "on"),
    "num_factors": _num_factors, "m_max": int, "k_bar": int, "method": str, "rho": str,
    "seed": int, "reps": int,
}


def _read_sim_config(path: Path) -> dict:
    if not path.is_file():
        raise InputError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not cp.has_section("simulation"):
        raise ConfigError(f"{path}: missing [simulation] section")
    out = {}
    for key, value in cp.items("simulation"):
        key = key.replace("-", "_")
        if key not in _SIM_KEYS:
            raise ConfigError(f"{path}: unknown key {key!r}")
        try:
            out[key] = _SIM_KEYS[key](value)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise ConfigError(f"{path}: bad value for {key}: {exc}") from None
    return out


def simulation_config(args) -> simulation.SimulationConfig:
    opts = _read_sim_config(args.config) if args.config else {}
    for key in _SIM_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    kwargs = {}
    mapping = {"n": "N", "t": "T"}
    for key, value in opts.items():
        if key == "method":
            kwargs["methods"] = _methods(value)
        else:
            kwargs[mapping.get(key, key)] = value
    return simulation.SimulationConfig(**kwargs)


def run_simulate(args) -> int:
    config = simulation_config(args)
    records = simulation.run_simulation(config, args.workers)
    k_bar = config.k_bar or groupfit.default_k_bar(config.n_units)
    out = args.out
    fields, rows = simulation.record_rows(records, with_time=args.timings)
    io.write_rows_csv(out / "replications.csv", fields, rows)
    summary = simulation.summarize(records, k_bar)
    header = (["method", "replications", "failed", "m_mean", "m_sd"]
              + [f"K{k}" for k in range(1, k_bar + 1)]
              + ["prec_mse_x10", "postc_mse_x10", "nmi", "purity"])
    srows = []
    for s in summary:
        srows.append([s["method"], s["replications"], s["failed"], s["m_mean"], s["m_sd"]]
                     + [s["K_freq"][k] for k in range(1, k_bar + 1)]
                     + [s["prec_mse_x10"], s["postc_mse_x10"], s["nmi"], s["purity"]])
    io.write_rows_csv(out / "summary.csv", header, srows)
    cfg = {k: getattr(config, k) for k in config.__dataclass_fields__}
    io.write_json(out / "summary.json", {"config": cfg, "k_bar": k_bar, "summary": summary})
    if args.export_panels:
        for rep in range(config.reps):
            panel = config.generate(rep)
            io.write_panel_csv(out / "panels" / f"rep_{rep:04d}.csv", panel.y)
    for s in summary:
        freq = " ".join(f"K{k}:{n}" for k, n in s["K_freq"].items() if n)
        print(f"{s['method']}: reps={s['replications']} failed={s['failed']} {freq} "
              f"PreC(x10)={_show(s['prec_mse_x10'])} PostC(x10)={_show(s['postc_mse_x10'])} "
              f"NMI={_show(s['nmi'])} Purity={_show(s['purity'])}")
    return 0


def _show(v):
    return "-" if v is None else f"{v:.3f}"


# ---------------------------------------------------------------- metrics


def _read_labels(path: Path):
    if not path.is_file():
        raise InputError(f"label file not found: {path}")
    labels = [line.strip().split(",")[-1] for line in path.read_text().splitlines()
              if line.strip()]
    if labels and not labels[0].lstrip("-").isdigit():
        labels = labels[1:]
    if not labels:
        raise InputError(f"{path}: no labels")
    return labels


def run_metrics(args) -> int:
    truth, est = _read_labels(args.truth), _read_labels(args.estimate)
    if len(truth) != len(est):
        raise InputError(f"label files cover {len(truth)} and {len(est)} units")
    g, g_hat = Partition.from_labels(truth), Partition.from_labels(est)
    doc = {"N": g.N, "K_true": g.K, "K_estimated": g_hat.K,
           "nmi": evaluate.nmi(g, g_hat), "purity": evaluate.purity(g, g_hat)}
    text = json.dumps(doc, indent=2)
    if args.out:
        io.write_json(args.out, doc)
    print(text)
    return 0


COMMANDS = {"fit": run_fit, "forecast": run_forecast, "simulate": run_simulate,
            "metrics": run_metrics}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except RFAError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
