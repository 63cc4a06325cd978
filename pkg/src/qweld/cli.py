"""``qweld`` command-line driver.

    qweld gen-data    synthetic blob dataset -> CSV
    qweld train-qsvm  VQLS-backed LS-SVM (binary or one-vs-rest)
    qweld train-vqc   four-qubit variational classifier
    qweld sweep       accuracy/loss table over feature sizes
    qweld kappa       condition number of K + lambda I

Exit codes: 0 success, 1 degraded or failed training, 2 usage/config error.
Reports are JSON with sorted keys and no timestamps, so identical arguments
give byte-identical output.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, data, qkernel, qsvm, vqc
from .optim import DfoConfig
from .simcore import ShotConfig

log = logging.getLogger("qweld")

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_DEGRADED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# argument helpers


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0 or not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _nonneg_float(text):
    v = float(text)
    if not v >= 0 or not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return v


def _fraction(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"expected a fraction in (0, 1), got {text}")
    return v


def _int_list(text):
    try:
        vals = [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    return vals


def _float_list(text):
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_common(p):
    p.add_argument("--seed", type=int, default=42, help="run seed (default 42)")
    p.add_argument("--out", help="output path")
    p.add_argument("--config", help="flat key = value file mirroring the flags")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_dataset(p, required=True):
    p.add_argument("--data", required=required, help="training CSV (f0..f{d-1},label)")
    p.add_argument("--test-data", help="held-out CSV; otherwise --data is split")
    p.add_argument("--train-fraction", type=_fraction, default=0.7)
    p.add_argument(
        "--weld-labels",
        action="store_true",
        help="labels are the weld ids 0, 2, 3 (Good weld, Contamination, Lack of fusion)",
    )


def _add_qsvm(p):
    p.add_argument("--lambda", dest="lam", type=_nonneg_float, default=0.1)
    p.add_argument("--epsilon", type=_positive_float, default=0.01)
    p.add_argument("--max-iters", type=_nonneg_int, default=300)
    p.add_argument("--shots", type=_positive_int, default=None, help="sampled Hadamard tests")
    p.add_argument("--exact", action="store_true", help="exact expectations (default)")
    p.add_argument("--backend", choices=("quantum", "classical"), default="quantum")
    p.add_argument("--layers", type=_positive_int, default=1, help="VQLS ansatz layers")
    p.add_argument("--model-out", help="model file (default: <out stem>.model.json)")


def _add_vqc(p):
    p.add_argument("--epochs", type=_nonneg_int, default=50)
    p.add_argument("--batch-size", type=_positive_int, default=16)
    p.add_argument("--lr", type=_positive_float, default=0.01)
    p.add_argument(
        "--gradient-mode",
        choices=("parameter_shift", "finite_difference_check"),
        default="parameter_shift",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qweld", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qweld {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a synthetic blob dataset")
    _add_common(p)
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--dim", type=int, default=63)
    p.add_argument("--separation", type=float, default=10.0)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train-qsvm", help="train the VQLS-backed LS-SVM")
    _add_common(p)
    _add_dataset(p)
    _add_qsvm(p)
    p.set_defaults(func=cmd_train_qsvm)

    p = sub.add_parser("train-vqc", help="train the variational classifier")
    _add_common(p)
    _add_dataset(p)
    _add_vqc(p)
    p.add_argument("--model-out", help="model file (default: <out stem>.model.json)")
    p.set_defaults(func=cmd_train_vqc)

    p = sub.add_parser("sweep", help="accuracy and loss over feature sizes")
    _add_common(p)
    _add_dataset(p, required=False)
    _add_qsvm(p)
    _add_vqc(p)
    p.add_argument("--model", choices=("qsvm", "vqc"), default="vqc")
    p.add_argument("--sizes", type=_int_list, default=list(data.PAPER_FEATURE_SIZES))
    p.add_argument("--classes", type=int, default=2)
    p.add_argument("--train-per-class", type=int, default=32)
    p.add_argument("--test-per-class", type=int, default=100)
    p.add_argument("--separation", type=float, default=10.0)
    p.add_argument("--table", help="also write the table as CSV")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("kappa", help="condition number of the regularised kernel")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--weld-labels", action="store_true")
    p.add_argument("--lambdas", type=_float_list, default=[0.01, 0.1, 1.0])
    p.set_defaults(func=cmd_kappa)
    return parser


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment; keys use flag spelling."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _apply_config(sub, path) -> None:
    """Install config values as subcommand defaults, so explicit flags win."""
    cfg = read_config(path)
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = "lam" if key == "lambda" else key
        act = actions.get(dest)
        if act is None or dest in ("config", "help", "func", "verbose"):
            raise UsageError(f"unknown config key {key!r}")
        if act.nargs == 0:
            defaults[dest] = value.lower() in ("1", "true", "yes", "on")
            continue
        try:
            v = act.type(value) if act.type else value
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"config key {key!r}: {exc}") from None
        if act.choices is not None and v not in act.choices:
            raise UsageError(f"config key {key!r}: {v!r} not in {sorted(act.choices)}")
        defaults[dest] = v
    sub.set_defaults(**defaults)
    for a in sub._actions:
        if a.dest in defaults:
            a.required = False


def workers() -> int:
    cap = os.environ.get("QWELD_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise UsageError(f"QWELD_THREADS must be an integer, got {cap!r}") from None
    return n


# --------------------------------------------------------------------------
# output


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else None
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def load_schema() -> dict:
    """The published JSON schema every report validates against."""
    text = resources.files("qweld").joinpath("schemas/report.schema.json").read_text("utf-8")
    return json.loads(text)


def dumps(doc) -> str:
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _write(path, text):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def emit_report(args, report) -> None:
    text = dumps(report)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)


def _model_path(args):
    if getattr(args, "model_out", None):
        return args.model_out
    if args.out:
        p = Path(args.out)
        return str(p.with_name(p.stem + ".model.json"))
    return None


def _base_report(args, extra_config: dict) -> dict:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "verbose", "config")}
    config.update(extra_config)
    return {"schema_version": SCHEMA_VERSION, "command": args.command, "config": config}


# --------------------------------------------------------------------------
# datasets


def _load(path, weld: bool) -> data.FeatureDataset:
    if not Path(path).is_file():
        raise UsageError(f"data file not found: {path}")
    try:
        return data.load_csv(path, data.WELD_CLASSES if weld else None)
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _train_test(args):
    ds = _load(args.data, args.weld_labels)
    if args.test_data:
        test = _load(args.test_data, args.weld_labels)
        if test.d != ds.d:
            raise UsageError(f"test data has {test.d} features, training data {ds.d}")
        if test.class_names != ds.class_names:
            raise UsageError("training and test data declare different classes")
        return ds, test, "file"
    try:
        train, test = data.split(ds, data.SplitSpec(args.train_fraction, args.seed, True))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return train, test, "split"


def _check_classes(train: data.FeatureDataset):
    present = np.unique(train.labels)
    if present.size < 2:
        raise UsageError("training data needs at least two classes")
    if present.size != train.num_classes:
        missing = sorted(set(range(train.num_classes)) - set(present.tolist()))
        raise UsageError(f"classes {[train.class_names[i] for i in missing]} absent from training data")


def _dataset_info(train, test, source):
    return {
        "source": source,
        "feature_dim": train.d,
        "n_train": train.n,
        "n_test": test.n,
        "class_names": list(train.class_names),
    }


# --------------------------------------------------------------------------
# commands


def cmd_gen_data(args) -> int:
    if args.dim < 2 or args.classes < 2 or args.per_class < 1 or not args.separation > 0:
        raise UsageError("need --dim >= 2, --classes >= 2, --per-class >= 1, --separation > 0")
    if args.classes > args.dim:
        raise UsageError(f"--classes {args.classes} equidistant centres need --dim >= {args.classes}")
    if not args.out:
        raise UsageError("gen-data needs --out")
    ds = data.synth_blobs(args.per_class, args.dim, args.classes, args.separation, args.seed)
    try:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        data.save_csv(ds, args.out)
    except OSError as exc:
        raise UsageError(f"cannot write {args.out}: {exc.strerror}") from None
    log.info("wrote %d samples (d=%d, C=%d) to %s", ds.n, ds.d, ds.num_classes, args.out)
    return EXIT_OK


def _shot_config(args) -> ShotConfig:
    if args.shots is not None and args.exact:
        raise UsageError("--shots and --exact are mutually exclusive")
    if args.shots is None:
        return ShotConfig("exact", seed=args.seed)
    return ShotConfig("sampled", args.shots, args.seed)


def _qsvm_kwargs(args) -> dict:
    if args.backend == "quantum" and args.lam <= 0:
        raise UsageError("--lambda must be positive")
    return dict(
        lam=args.lam,
        vqls_cfg=DfoConfig(epsilon=args.epsilon, max_iters=args.max_iters, seed=args.seed),
        shot_cfg=_shot_config(args),
        backend=args.backend,
        layers=args.layers,
    )


def _split_metrics(model, ds, predict_fn, prob_fn):
    pred = predict_fn(model, ds.features)
    out = data.metrics(pred, ds.labels, ds.num_classes)
    p = prob_fn(model, ds.features)
    out["loss"] = float(-np.mean(np.log(np.maximum(p[np.arange(ds.n), ds.labels], 1e-300))))
    return out


def _fit_qsvm(train, seed, kwargs):
    try:
        return qsvm.fit_classifier(
            train.features, train.labels, train.num_classes, seed=seed, workers=workers(), **kwargs
        )
    except qsvm.SingularSystemError as exc:
        raise UsageError(str(exc)) from None


def _qsvm_per_class(model, class_names):
    rows = []
    bins = qsvm.binaries_of(model)
    # a binary model separates class 1 (+1) from class 0
    labels = [class_names[1]] if len(bins) == 1 else list(class_names)
    for name, b in zip(labels, bins):
        d = b.diagnostics
        rows.append(
            {
                "class": name,
                "kappa": d["kappa"],
                "iterations": d["iterations"],
                "final_cost": d["final_cost"],
                "converged": d["converged"],
                "fidelity": d["fidelity"],
                "degraded": d["degraded"],
                "num_qubits": d["num_qubits"],
                "pauli_terms": d["pauli_terms"],
            }
        )
    return rows


def cmd_train_qsvm(args) -> int:
    kwargs = _qsvm_kwargs(args)
    train, test, source = _train_test(args)
    _check_classes(train)
    model = _fit_qsvm(train, args.seed, kwargs)

    def run_metrics(ds):
        return _split_metrics(model, ds, qsvm.predict, qsvm.class_probabilities)

    report = _base_report(args, {})
    report["dataset"] = _dataset_info(train, test, source)
    report["oracle_mode"] = args.backend == "classical"
    report["model_kind"] = "binary" if train.num_classes == 2 else "ovr"
    report["per_class"] = _qsvm_per_class(model, train.class_names)
    report["train"] = run_metrics(train)
    report["test"] = run_metrics(test)
    if args.backend == "quantum":
        oracle = _fit_qsvm(train, args.seed, dict(kwargs, backend="classical"))
        report["oracle_agreement"] = float(
            np.mean(qsvm.predict(model, test.features) == qsvm.predict(oracle, test.features))
        )
    degraded = all(r["degraded"] for r in report["per_class"])
    report["status"] = "degraded" if degraded else "ok"

    mpath = _model_path(args)
    if mpath:
        _write(mpath, dumps(qsvm.to_document(model, train.class_names)))
    emit_report(args, report)
    if degraded:
        log.error("every VQLS solve is degraded (fidelity < %.2f)", qsvm.DEGRADED_FIDELITY)
        return EXIT_DEGRADED
    return EXIT_OK


def _vqc_config(args) -> vqc.TrainConfig:
    return vqc.TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        seed=args.seed,
        gradient_mode=args.gradient_mode,
    )


def _fit_vqc(train, cfg):
    if cfg.batch_size > train.n:
        raise UsageError(f"--batch-size {cfg.batch_size} exceeds the {train.n} training samples")
    return vqc.train(train.features, train.labels, cfg, num_classes=train.num_classes)


def cmd_train_vqc(args) -> int:
    cfg = _vqc_config(args)
    train, test, source = _train_test(args)
    _check_classes(train)
    try:
        model, history = _fit_vqc(train, cfg)
    except vqc.GradientCheckError as exc:
        log.error("%s", exc)
        return EXIT_DEGRADED

    report = _base_report(args, {"num_qubits": vqc.NUM_QUBITS})
    report["dataset"] = _dataset_info(train, test, source)
    report["history"] = history
    report["train"] = vqc.evaluate(model, train.features, train.labels)
    report["test"] = vqc.evaluate(model, test.features, test.labels)
    failed = not np.isfinite(report["train"]["loss"])
    report["status"] = "failed" if failed else "ok"

    mpath = _model_path(args)
    if mpath:
        meta = {
            "seed": args.seed,
            "epochs": args.epochs,
            "batch_size": args.batch_size,
            "learning_rate": args.lr,
            "final_loss": history[-1]["loss"] if history else None,
        }
        _write(mpath, dumps(vqc.to_document(model, train.class_names, meta)))
    emit_report(args, report)
    return EXIT_DEGRADED if failed else EXIT_OK


def _sweep_cell(args, size, base):
    """Train and evaluate at one feature size; failures are reported, not raised."""
    cell = {"feature_size": size}
    try:
        if base is None:
            train = data.synth_blobs(
                args.train_per_class, size, args.classes, args.separation, args.seed
            )
            test = data.synth_blobs(
                args.test_per_class, size, args.classes, args.separation, args.seed + 1
            )
        else:
            train, test = base[0].truncate(size), base[1].truncate(size)
        if args.model == "vqc":
            model, _ = _fit_vqc(train, _vqc_config(args))
            tr = vqc.evaluate(model, train.features, train.labels)
            te = vqc.evaluate(model, test.features, test.labels)
        else:
            model = qsvm.fit_classifier(
                train.features, train.labels, train.num_classes, seed=args.seed,
                **_qsvm_kwargs(args),
            )
            tr = _split_metrics(model, train, qsvm.predict, qsvm.class_probabilities)
            te = _split_metrics(model, test, qsvm.predict, qsvm.class_probabilities)
            cell["degraded"] = all(b.degraded for b in qsvm.binaries_of(model))
        cell.update(
            status="ok",
            train_accuracy=tr["accuracy"],
            train_loss=tr["loss"],
            test_accuracy=te["accuracy"],
            test_loss=te["loss"],
            confusion=te["confusion"],
        )
    except (ValueError, UsageError, ArithmeticError) as exc:
        log.warning("feature size %d failed: %s", size, exc)
        cell.update(status="failed", error=str(exc))
    return cell


def _cell_text(v) -> str:
    if v is None:
        return ""
    return repr(float(v)) if isinstance(v, float) else str(v)


def cmd_sweep(args) -> int:
    sizes = list(args.sizes)
    if not sizes:
        raise UsageError("--sizes is empty")
    if any(s < 2 for s in sizes) or len(set(sizes)) != len(sizes):
        raise UsageError("--sizes must be distinct integers >= 2")
    base = None
    source = "synthetic"
    if args.data:
        train, test, source = _train_test(args)
        if max(sizes) > train.d:
            raise UsageError(f"largest sweep size {max(sizes)} exceeds the {train.d} CSV columns")
        base = (train, test)
        source = f"csv-truncated/{source}"
    elif args.classes < 2 or args.train_per_class < 1 or args.test_per_class < 1:
        raise UsageError("need --classes >= 2 and positive per-class counts")
    if args.model == "qsvm":
        _qsvm_kwargs(args)  # validate before spending time

    with ThreadPoolExecutor(max_workers=min(workers(), len(sizes))) as pool:
        cells = list(pool.map(lambda s: _sweep_cell(args, s, base), sizes))

    report = _base_report(args, {})
    report["feature_handling"] = (
        "regenerated blobs per size" if base is None else "first d columns of the CSV"
    )
    report["source"] = source
    report["rows"] = cells
    ok = [c for c in cells if c["status"] == "ok"]
    report["status"] = "ok" if len(ok) == len(cells) else ("partial" if ok else "failed")
    emit_report(args, report)
    if args.table:
        cols = ["feature_size", "status", "train_accuracy", "train_loss", "test_accuracy", "test_loss"]
        lines = [",".join(cols)]
        for c in cells:
            lines.append(",".join(_cell_text(c.get(k)) for k in cols))
        _write(args.table, "\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_DEGRADED


def cmd_kappa(args) -> int:
    if not args.lambdas:
        raise UsageError("--lambdas is empty")
    if any(lam < 0 for lam in args.lambdas):
        raise UsageError("--lambdas must be non-negative")
    ds = _load(args.data, args.weld_labels)
    K = qkernel.kernel_matrix(ds.features)
    rows = []
    try:
        for lam, kappa, lo, hi in qkernel.kappa_table(K, args.lambdas):
            rows.append({"lambda": lam, "kappa": kappa, "min_eig": lo, "max_eig": hi})
    except ValueError as exc:
        raise UsageError(f"kernel matrix is singular or indefinite: {exc}") from None
    for r in rows:
        print(f"lambda={r['lambda']:<8g} kappa={r['kappa']:.6g}  min_eig={r['min_eig']:.6g}  max_eig={r['max_eig']:.6g}")
    if args.out:
        report = _base_report(args, {})
        report["n"] = ds.n
        report["feature_dim"] = ds.d
        report["rows"] = rows
        report["status"] = "ok"
        _write(args.out, dumps(report))
    return EXIT_OK


# --------------------------------------------------------------------------


def _preconfigure(parser, argv) -> None:
    """Find ``<command> ... --config FILE`` ahead of the real parse."""
    subs = parser._subparsers._group_actions[0].choices
    command = next((a for a in argv if a in subs), None)
    if command is None:
        return
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv[argv.index(command) + 1 :])
    if known.config:
        try:
            _apply_config(subs[command], known.config)
        except UsageError as exc:
            raise UsageError(f"{command}: {exc}") from None


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _preconfigure(parser, argv)
    except UsageError as exc:
        print(f"qweld: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"qweld {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
