"""Command-line harness: ``gslearn {generate,solve,train,eval,gridsearch,inspect}``.

Every option can also come from ``--config file.json`` (keys are the option
names with dashes or underscores); explicit flags override the file. The
effective configuration is written to ``run_config.json`` in the output
directory and can be fed back through ``--config`` to reproduce a run.

Exit codes: 0 success, 1 runtime or IO failure, 2 argument error.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import dataio
from .errors import GSLError
from .metrics import LOWER_IS_BETTER, REPORT_FIELDS, EvalReport, evaluate_estimates, sample_metrics
from .solvers import MBHyperparams, SolverConfig, fixed_point_solve, kkt_residual, objective, solve_batch
from .synth import GraphEnsembleSpec, SignalModelSpec, build_dataset

ENSEMBLE_NAMES = {"er": "ER", "ba": "BA", "ws": "WS", "sbm": "SBM", "grid": "grid"}
GRID_KEYS = ("alpha", "beta", "gamma", "lambda_pen", "rho_l1")
METRICS = REPORT_FIELDS[:6]

MB_DEFAULTS = {"alpha": 1.0, "beta": 1.0, "gamma": None, "poly_alpha": "1,0.5",
               "lambda_pen": 1.0, "rho": 0.01, "no_line_search": False,
               "tol": 1e-6, "max_iter": 5000}

DEFAULTS = {
    "generate": {"graphs": "er", "n": 100, "p": 0.5, "m": 2, "k": 4, "blocks": "50,50",
                 "probs": "[[0.5,0.05],[0.05,0.5]]", "rows": 10, "cols": 10,
                 "signals": "smooth", "num_signals": 50, "eps": 0.01, "alpha": "1,0.5",
                 "noise_sigma": 0.0, "eps_pd": 0.05, "whiten": False,
                 "similarity": "covariance", "center": False, "edge_list": None,
                 "train": 500, "val": 100, "test": 100, "seed": 0, "out": "dataset.gsld"},
    "solve": {"dataset": None, "method": None, **MB_DEFAULTS, "split": "test", "tau": 0.5,
              "record_trace": False, "jobs": 1, "seed": 0, "out": "solve_out"},
    "train": {"dataset": None, "method": "gdn", "depth": 10, "epochs": 200, "lr": 1e-3,
              "batch_size": 32, "loss": "mse", "patience": None, "tie_layers": False,
              "order": 1, "tau": 0.5, "dump_intermediates": None, "seed": 0, "jobs": 1,
              "out": "train_out"},
    "eval": {"dataset": None, "model": None, "method": None, "split": "test", "tau": 0.5,
             "dump_intermediates": None, "seed": 0, "jobs": 1, "out": "eval_out"},
    "gridsearch": {"dataset": None, "method": None, **MB_DEFAULTS, "grid": [], "metric": "f1",
                   "split": "val", "tau": 0.5, "jobs": 1, "seed": 0, "out": "grid_out"},
    "inspect": {"dataset": None},
}


class ArgumentError(Exception):
    pass


def _floats(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    try:
        return tuple(float(x) for x in str(text).split(",") if x.strip())
    except ValueError as exc:
        raise ArgumentError(f"expected comma-separated numbers, got {text!r}") from exc


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)] + [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


# -- parser -------------------------------------------------------------------

def _mb_options(p):
    p.add_argument("--alpha", type=float, help="smooth: log-degree weight")
    p.add_argument("--beta", type=float, help="l1 weight (diffusion), ridge (smooth), log-det weight (gaussian)")
    p.add_argument("--gamma", type=float, help="smooth: primal-dual step; diffusion: initial step")
    p.add_argument("--poly-alpha", help="diffusion filter coefficients c0,c1,...")
    p.add_argument("--lambda-pen", type=float, help="gaussian: quadratic penalty weight")
    p.add_argument("--rho", type=float, help="gaussian: l1 weight")
    p.add_argument("--no-line-search", action="store_true", help="diffusion: fixed step")
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gslearn", description="Graph structure learning toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="JSON file with option values")
        if name != "inspect":
            p.add_argument("--seed", type=int)
            p.add_argument("-o", "--out")
            p.add_argument("--jobs", type=int, help="worker threads")
        return p

    g = add("generate", "sample a synthetic dataset")
    g.add_argument("--graphs", type=str.lower, choices=sorted(ENSEMBLE_NAMES))
    g.add_argument("--n", type=int)
    g.add_argument("--p", type=float, help="edge probability (ER) or rewiring probability (WS)")
    g.add_argument("--m", type=int, help="BA attachment edges")
    g.add_argument("--k", type=int, help="WS ring degree")
    g.add_argument("--blocks", help="SBM block sizes, comma-separated")
    g.add_argument("--probs", help="SBM probability matrix as JSON")
    g.add_argument("--rows", type=int)
    g.add_argument("--cols", type=int)
    g.add_argument("--edge-list", help="use this graph for every sample (pseudo-synthetic)")
    g.add_argument("--signals", choices=["smooth", "diffuse", "gaussian"])
    g.add_argument("--num-signals", type=int)
    g.add_argument("--eps", type=float)
    g.add_argument("--alpha", help="diffusion coefficients c0,c1,...")
    g.add_argument("--noise-sigma", type=float)
    g.add_argument("--eps-pd", type=float)
    g.add_argument("--whiten", action="store_true")
    g.add_argument("--similarity", choices=["covariance", "correlation", "distance"])
    g.add_argument("--center", action="store_true")
    g.add_argument("--train", type=int)
    g.add_argument("--val", type=int)
    g.add_argument("--test", type=int)

    s = add("solve", "run a model-based solver on every sample of a split")
    s.add_argument("--dataset")
    s.add_argument("--method", choices=["gaussian", "smooth", "diffusion"])
    _mb_options(s)
    s.add_argument("--split", choices=["train", "val", "test", "all"])
    s.add_argument("--tau", type=float, help="edge threshold for precision/recall/F1")
    s.add_argument("--record-trace", action="store_true")

    t = add("train", "train an unrolled model")
    t.add_argument("--dataset")
    t.add_argument("--method", choices=["glad", "l2g", "gdn"])
    t.add_argument("--depth", type=int)
    t.add_argument("--epochs", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--batch-size", type=int)
    t.add_argument("--loss", choices=["mse", "nll_logistic"])
    t.add_argument("--patience", type=int)
    t.add_argument("--tie-layers", action="store_true")
    t.add_argument("--order", type=int, help="gdn polynomial order K")
    t.add_argument("--tau", type=float)
    t.add_argument("--dump-intermediates", type=int, metavar="K")

    e = add("eval", "evaluate a trained checkpoint")
    e.add_argument("--dataset")
    e.add_argument("--model")
    e.add_argument("--method", choices=["glad", "l2g", "gdn"])
    e.add_argument("--split", choices=["train", "val", "test", "all"])
    e.add_argument("--tau", type=float)
    e.add_argument("--dump-intermediates", type=int, metavar="K")

    gs = add("gridsearch", "exhaustive hyperparameter search for a model-based solver")
    gs.add_argument("--dataset")
    gs.add_argument("--method", choices=["gaussian", "smooth", "diffusion"])
    _mb_options(gs)
    gs.add_argument("--grid", action="append", metavar="NAME=V1,V2,...")
    gs.add_argument("--metric", choices=list(METRICS))
    gs.add_argument("--split", choices=["train", "val", "test", "all"])
    gs.add_argument("--tau", type=float)

    i = add("inspect", "print a dataset file's header and metadata")
    i.add_argument("dataset", nargs="?")
    return parser


def resolve_config(command: str, explicit: dict) -> dict:
    """Defaults, then the ``--config`` file, then explicit flags."""
    cfg = dict(DEFAULTS[command])
    path = explicit.pop("config", None)
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ArgumentError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ArgumentError("config file must hold a JSON object")
        for key, val in doc.items():
            k = key.replace("-", "_")
            if k == "command":
                if val != command:
                    raise ArgumentError(f"config is for command {val!r}, not {command!r}")
                continue
            if k not in cfg:
                raise ArgumentError(f"unknown config key {key!r} for {command}")
            cfg[k] = val
    cfg.update(explicit)
    return cfg


def _require(cfg, *keys):
    for k in keys:
        if cfg.get(k) is None:
            raise ArgumentError(f"--{k.replace('_', '-')} is required")


def _echo(cfg, command, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    _dump_json(directory / "run_config.json", {"command": command, **cfg})


def _hyperparams(cfg, overrides=None) -> MBHyperparams:
    vals = {"alpha": cfg["alpha"], "beta": cfg["beta"], "gamma": cfg["gamma"],
            "lambda_pen": cfg["lambda_pen"], "rho_l1": cfg["rho"]}
    vals.update(overrides or {})
    return MBHyperparams(method=cfg["method"], poly_alpha=_floats(cfg["poly_alpha"]),
                         line_search=not cfg["no_line_search"], **vals)


# -- commands -----------------------------------------------------------------

def cmd_generate(cfg) -> int:
    sizes = {k: int(cfg[k]) for k in ("train", "val", "test")}
    if any(v < 0 for v in sizes.values()) or sum(sizes.values()) == 0:
        raise ArgumentError("split sizes must be >= 0 with at least one nonzero")
    ens = ENSEMBLE_NAMES[str(cfg["graphs"]).lower()]
    n = int(cfg["n"])
    params = {"ER": lambda: {"p": cfg["p"]},
              "BA": lambda: {"m": cfg["m"]},
              "WS": lambda: {"k": cfg["k"], "p": cfg["p"]},
              "SBM": lambda: {"sizes": [int(b) for b in _floats(cfg["blocks"])],
                              "probs": json.loads(cfg["probs"]) if isinstance(cfg["probs"], str)
                              else cfg["probs"]},
              "grid": lambda: {"rows": cfg["rows"], "cols": cfg["cols"]}}[ens]()
    if ens == "grid":
        n = int(cfg["rows"]) * int(cfg["cols"])
    sspec = SignalModelSpec(model=cfg["signals"], p_signals=int(cfg["num_signals"]),
                            eps=cfg["eps"], alpha=_floats(cfg["alpha"]),
                            noise_sigma=cfg["noise_sigma"], eps_pd=cfg["eps_pd"],
                            whiten=bool(cfg["whiten"]))
    seed = int(cfg["seed"])
    if cfg["edge_list"]:
        ds = _pseudo_synthetic(cfg, sspec, sizes, seed)
    else:
        gspec = GraphEnsembleSpec(ens, n, params, seed)
        ds = build_dataset(gspec, sspec, cfg["similarity"], sizes, seed, bool(cfg["center"]))
    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    dataio.write_dataset(ds, out)
    _echo(cfg, "generate", out.parent)
    print(f"wrote {out}: n={ds.n} p={ds.p} samples={len(ds)} "
          f"splits={ds.sizes['train']}/{ds.sizes['val']}/{ds.sizes['test']} seed={seed}")
    return 0


def _pseudo_synthetic(cfg, sspec, sizes, seed):
    from dataclasses import asdict, replace

    from .synth import Dataset, child_seed, generate_signals, similarity

    a = dataio.import_edge_list(cfg["edge_list"])
    total = sum(sizes.values())
    n, p = a.shape[0], sspec.p_signals
    adj, sig, sim = np.empty((total, n, n)), np.empty((total, n, p)), np.empty((total, n, n))
    for i in range(total):
        x = generate_signals(a, replace(sspec, seed=child_seed(seed, i, 1)))
        adj[i], sig[i], sim[i] = a, x, similarity(x, cfg["similarity"], bool(cfg["center"]))
    meta = {"graph": {"edge_list": str(cfg["edge_list"]), "n": n},
            "signals": {**asdict(sspec), "alpha": list(sspec.alpha)},
            "similarity": cfg["similarity"], "center": bool(cfg["center"]), "seed": seed,
            "sizes": sizes}
    meta["signals"].pop("seed")
    return Dataset(adj, sig, sim, cfg["similarity"], sizes, meta)


def _load(cfg):
    _require(cfg, "dataset")
    return dataio.read_dataset(cfg["dataset"])


SUMMARY_HEADER = ["sample", "status", "iterations", "terminated", "objective", "residual", "kkt",
                  *METRICS]


def _solve_rows(ds, split, hp, scfg, tau, jobs, start_index=0):
    sims, targets = ds.split(split)
    results = solve_batch(sims, hp, scfg, ds.kind, jobs)
    rows, ests, tgts, failed = [], [], [], 0
    for k, (res, s, a) in enumerate(zip(results, sims, targets)):
        idx = start_index + k
        if isinstance(res, Exception):
            failed += 1
            rows.append([idx, f"error: {res}".replace(",", ";")] + [""] * (len(SUMMARY_HEADER) - 2))
            continue
        m = sample_metrics(res.estimate, a, tau)
        rows.append([idx, "ok", res.iterations, res.terminated,
                     objective(hp.method, res.state, s, hp), res.residual,
                     kkt_residual(hp.method, res.state, s, hp), *[m[k] for k in METRICS]])
        ests.append(res.estimate)
        tgts.append(a)
    return results, rows, ests, tgts, failed


def cmd_solve(cfg) -> int:
    _require(cfg, "method")
    ds = _load(cfg)
    hp = _hyperparams(cfg)
    scfg = SolverConfig(tol=cfg["tol"], max_iter=int(cfg["max_iter"]),
                        record_trace=bool(cfg["record_trace"]))
    out = Path(cfg["out"])
    _echo(cfg, "solve", out)
    sl = ds.split_slice(cfg["split"])
    results, rows, ests, tgts, failed = _solve_rows(ds, cfg["split"], hp, scfg, cfg["tau"],
                                                    int(cfg["jobs"]), sl.start)
    _write_csv(out / "summary.csv", SUMMARY_HEADER, rows)
    if cfg["record_trace"]:
        tdir = out / "traces"
        tdir.mkdir(exist_ok=True)
        for k, res in enumerate(results):
            if isinstance(res, Exception):
                continue
            _write_csv(tdir / f"trace_{sl.start + k:04}.csv", ["iteration", "residual", "objective"],
                       [[i + 1, r, o] for i, (r, o) in
                        enumerate(zip(res.residual_trace, res.objective_trace))])
    report = {"method": hp.method, "split": cfg["split"], "samples": len(results),
              "failed": failed}
    if ests:
        report["metrics"] = evaluate_estimates(ests, tgts, cfg["tau"]).to_dict()
        ok = [r for r in results if not isinstance(r, Exception)]
        report["mean_iterations"] = float(np.mean([r.iterations for r in ok]))
        report["converged"] = sum(r.terminated == "converged" for r in ok)
    _dump_json(out / "report.json", report)
    if failed:
        first = next(r for r in results if isinstance(r, Exception))
        print(f"{failed} of {len(results)} samples failed; first error: {first}", file=sys.stderr)
        return 1
    print(json.dumps(report["metrics"], sort_keys=True))
    return 0


def _model_dump(model, ds, k, directory):
    from .unroll import unroll_forward

    if not 0 <= k < len(ds):
        raise ArgumentError(f"--dump-intermediates sample {k} out of range (0..{len(ds) - 1})")
    _, trace = unroll_forward(model, ds.similarity[k], keep_caches=False)
    return dataio.dump_intermediates(model, trace, directory)


def cmd_train(cfg) -> int:
    from .unroll import init_model
    from .unroll.model import SIMILARITY_FOR
    from .unroll.train import TrainConfig, train

    ds = _load(cfg)
    if ds.kind not in SIMILARITY_FOR[cfg["method"]]:
        raise ArgumentError(f"{cfg['method']} needs a {SIMILARITY_FOR[cfg['method']]} dataset, got {ds.kind}")
    model = init_model(cfg["method"], int(cfg["depth"]), int(cfg["seed"]), int(cfg["order"]),
                       bool(cfg["tie_layers"]))
    tcfg = TrainConfig(epochs=int(cfg["epochs"]), learning_rate=float(cfg["lr"]),
                       batch_size=int(cfg["batch_size"]), loss=cfg["loss"], seed=int(cfg["seed"]),
                       patience=cfg["patience"], tau=float(cfg["tau"]))
    out = Path(cfg["out"])
    _echo(cfg, "train", out)
    trained, report = train(model, ds, tcfg)
    dataio.save_model(trained, out / "model.json")
    _write_csv(out / "epochs.csv", ["epoch", "train_loss", "val_loss", "seconds"],
               [[i + 1, tl, vl, sec] for i, (tl, vl, sec) in
                enumerate(zip(report.train_loss, report.val_loss, report.epoch_seconds))])
    _dump_json(out / "train_report.json", report.to_dict())
    if cfg["dump_intermediates"] is not None:
        _model_dump(trained, ds, int(cfg["dump_intermediates"]), out / "intermediates")
    print(f"best epoch {report.best_epoch} val_loss {report.best_val_loss:.6g}")
    return 0


def cmd_eval(cfg) -> int:
    from .unroll.train import evaluate

    _require(cfg, "model")
    ds = _load(cfg)
    model = dataio.load_model(cfg["model"], cfg["method"])
    out = Path(cfg["out"])
    _echo(cfg, "eval", out)
    rep = evaluate(model, ds, cfg["split"], float(cfg["tau"]))
    _dump_json(out / "eval_report.json", rep.to_dict())
    (out / "eval_report.csv").write_text(EvalReport.csv_header() + "\n" + rep.csv_row() + "\n")
    if cfg["dump_intermediates"] is not None:
        _model_dump(model, ds, int(cfg["dump_intermediates"]), out / "intermediates")
    print(json.dumps(rep.to_dict(), sort_keys=True))
    return 0


def parse_grid(entries) -> dict:
    """``["beta=0,0.1", ...]`` or ``{"beta": [0, 0.1]}`` -> ``{name: [values]}``."""
    if isinstance(entries, dict):
        items = list(entries.items())
    else:
        items = []
        for entry in entries:
            if "=" not in entry:
                raise ArgumentError(f"grid entry {entry!r} is not NAME=V1,V2,...")
            name, vals = entry.split("=", 1)
            items.append((name, vals))
    grid = {}
    for name, vals in items:
        key = {"rho": "rho_l1", "lambda": "lambda_pen"}.get(name.strip(), name.strip())
        if key not in GRID_KEYS:
            raise ArgumentError(f"cannot grid over {name!r}; choose from {GRID_KEYS}")
        values = list(_floats(vals))
        if not values:
            raise ArgumentError(f"grid for {name!r} is empty")
        grid[key] = values
    if not grid:
        raise ArgumentError("--grid is required")
    return grid


def cmd_gridsearch(cfg) -> int:
    _require(cfg, "method")
    grid = parse_grid(cfg["grid"])
    ds = _load(cfg)
    metric = cfg["metric"]
    keys = sorted(grid)
    points = list(itertools.product(*(grid[k] for k in keys)))
    scfg = SolverConfig(tol=cfg["tol"], max_iter=int(cfg["max_iter"]))
    hps = [_hyperparams(cfg, dict(zip(keys, pt))) for pt in points]
    sims, targets = ds.split(cfg["split"])

    def run(hp):
        results = [fixed_point_solve(s, hp, scfg, ds.kind) for s in sims]
        return evaluate_estimates([r.estimate for r in results], targets, cfg["tau"])

    jobs = int(cfg["jobs"])
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(run, hps))
    else:
        reports = [run(hp) for hp in hps]
    sign = 1.0 if metric in LOWER_IS_BETTER else -1.0
    order = sorted(range(len(points)), key=lambda i: (sign * getattr(reports[i], metric), points[i]))
    out = Path(cfg["out"])
    _echo(cfg, "gridsearch", out)
    rows = [[rank + 1, *points[i], *(getattr(reports[i], m) for m in METRICS)]
            for rank, i in enumerate(order)]
    _write_csv(out / "leaderboard.csv", ["rank", *keys, *METRICS], rows)
    best = order[0]
    best_doc = {"method": cfg["method"], "metric": metric, "split": cfg["split"],
                "hyperparameters": dict(zip(keys, points[best])),
                "report": reports[best].to_dict()}
    _dump_json(out / "best.json", best_doc)
    print(json.dumps(best_doc["hyperparameters"], sort_keys=True))
    return 0


def cmd_inspect(cfg) -> int:
    _require(cfg, "dataset")
    print(json.dumps(dataio.dataset_info(cfg["dataset"]), indent=1, sort_keys=True))
    return 0


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "train": cmd_train, "eval": cmd_eval,
            "gridsearch": cmd_gridsearch, "inspect": cmd_inspect}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    explicit = {k: v for k, v in vars(ns).items() if k != "command"}
    command = ns.command
    try:
        cfg = resolve_config(command, explicit)
        return COMMANDS[command](cfg)
    except ArgumentError as exc:
        parser.exit(2, f"gslearn {command}: error: {exc}\n")
    except (GSLError, OSError, ValueError) as exc:
        print(f"gslearn {command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
