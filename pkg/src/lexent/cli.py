"""Command-line entry point: ``lexent <command> [options]``.

Every command writes into a fresh run directory ``<runs>/<timestamp>-seed<seed>``
(or ``--run-dir``) together with ``manifest.json``, which echoes the resolved
configuration, the seed and SHA-256 checksums of every input.  ``lexent rerun
manifest.json`` repeats a run; machine-readable outputs carry no timestamps,
so a rerun reproduces them byte for byte.

Options may also come from a key-value file given with ``--config``
(``key = value`` lines, ``#`` comments).  Precedence is flags, then the
config file, then built-in defaults.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import datasets, experiments, svm, vsm
from .features import ReferenceSet, SimDiffsSpace

logger = logging.getLogger("lexent")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def _ints(text):
    return tuple(int(x) for x in str(text).replace(",", " ").split())


def _floats(text):
    return tuple(float(x) for x in str(text).replace(",", " ").split())


def _optional_int(text):
    return None if text in (None, "", "None", "none") else int(text)


# (name, type, default, is_input_path, help) per command
_COMMON = [
    ("seed", int, 0, False, "random seed"),
    ("runs", str, "runs", False, "parent directory for run directories"),
    ("run_dir", str, None, False, "exact run directory (overrides --runs)"),
]

_SVM = [
    ("kernel", str, None, False, "polynomial or rbf (default depends on --algo)"),
    ("degree", int, 2, False, "polynomial kernel degree"),
    ("gamma", float, 0.01, False, "rbf kernel width"),
    ("C", float, 1.0, False, "SVM cost"),
]

_RESOURCES = [
    ("ppmi", str, None, True, "PPMI matrix (balapinc; convecs without --embedding)"),
    ("embedding", str, None, True, "ConVecs embedding file"),
    ("domain_ppmi", str, None, True, "domain PPMI matrix (simdiffs)"),
    ("function_ppmi", str, None, True, "function PPMI matrix (simdiffs)"),
    ("domain_embedding", str, None, True, "domain embedding file (simdiffs)"),
    ("function_embedding", str, None, True, "function embedding file (simdiffs)"),
    ("refs", str, None, True, "reference word list (default: bundled Basic English)"),
]

COMMANDS = {
    "ingest": [
        ("corpus", str, None, True, "corpus, one sentence per line (word or word_TAG tokens)"),
        ("vocab", str, None, True, "row vocabulary, one term per line"),
        ("contexts", str, None, True, "context vocabulary (default: --vocab)"),
        ("window", int, 4, False, "window size on each side"),
        ("policy", str, "general", False, "general, domain or function"),
    ],
    "ppmi": [
        ("counts", str, None, True, "count matrix written by ingest"),
    ],
    "svd": [
        ("ppmi", str, None, True, "PPMI matrix"),
        ("k", int, 100, False, "number of singular values kept"),
        ("p", float, 0.5, False, "exponent on singular values"),
        ("space", str, "general", False, "general, domain or function"),
    ],
    "transform-jmth": [
        ("rated", str, None, True, "rated pairs: a, b, subcategory id, rating"),
        ("taxonomy", str, None, True, "taxonomy table (default: bundled)"),
        ("n_remove", int, 10, False, "lowest-rated pairs dropped per subcategory"),
        ("split", int, 1, False, "also write dev1/dev2/test splits (0 or 1)"),
    ],
    "tune": [
        ("algo", str, None, False, "balapinc, convecs or simdiffs"),
        ("dev1", str, None, True, "training dev split"),
        ("dev2", str, None, True, "selection dev split"),
        ("grid_max_f", _ints, experiments.GRID_MAX_F, False, "max_F grid (balapinc)"),
        ("grid_k", _ints, experiments.GRID_K, False, "k grid (convecs, simdiffs)"),
        ("grid_p", _floats, experiments.GRID_P, False, "p grid (convecs, simdiffs)"),
        *_RESOURCES, *_SVM,
    ],
    "evaluate": [
        ("algo", str, None, False, "balapinc, convecs or simdiffs"),
        ("setup", str, "standard", False, "standard, clustered, balanced or different"),
        ("dataset", str, None, True, "dataset for cross-validation setups"),
        ("train", str, None, True, "training dataset (different setup)"),
        ("test", str, None, True, "test dataset (different setup)"),
        ("folds", int, 10, False, "number of folds"),
        ("max_f", _optional_int, None, False, "balapinc feature cap"),
        ("k", int, None, False, "SVD rank when building embeddings from PPMI"),
        ("p", float, None, False, "exponent when building embeddings from PPMI"),
        *_RESOURCES, *_SVM,
    ],
}

ALGOS = ("balapinc", "convecs", "simdiffs")


# -- configuration ------------------------------------------------------------

def read_config(path) -> dict:
    """Parse ``key = value`` lines; keys may use dashes or underscores."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve(command: str, flags: dict, config: dict) -> dict:
    """Merge flags over config over defaults and convert types."""
    spec = COMMANDS[command] + _COMMON
    known = {name for name, *_ in spec}
    resolved = {}
    for name, typ, default, _, _ in spec:
        if flags.get(name) is not None:
            value = flags[name]
        elif name in config:
            try:
                value = typ(config[name]) if typ is not str else config[name]
            except ValueError:
                raise UsageError(f"config value {name} = {config[name]!r} is invalid") from None
        else:
            value = default
        resolved[name] = value
    ignored = sorted(set(config) - known)
    if ignored:
        logger.info("config keys not used by %s: %s", command, ", ".join(ignored))
    return resolved


def validate(command: str, cfg: dict):
    for name, _, _, is_path, _ in COMMANDS[command]:
        if is_path and cfg.get(name) is not None and not os.path.exists(cfg[name]):
            raise UsageError(f"--{name.replace('_', '-')}: no such file: {cfg[name]}")
    need = {"ingest": ("corpus", "vocab"), "ppmi": ("counts",), "svd": ("ppmi",),
            "transform-jmth": ("rated",), "tune": ("algo", "dev1", "dev2"),
            "evaluate": ("algo",)}[command]
    for name in need:
        if cfg.get(name) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required")
    if "algo" in cfg and cfg["algo"] not in ALGOS:
        raise UsageError(f"--algo must be one of {', '.join(ALGOS)}")
    if command == "ingest" and cfg["policy"] not in vsm.POLICIES:
        raise UsageError(f"--policy must be one of {', '.join(vsm.POLICIES)}")
    if command == "evaluate":
        from .folds import SETUPS
        if cfg["setup"] not in SETUPS:
            raise UsageError(f"--setup must be one of {', '.join(SETUPS)}")
        if cfg["setup"] == "different":
            if cfg["train"] is None or cfg["test"] is None:
                raise UsageError("the different setup needs --train and --test")
        elif cfg["dataset"] is None:
            raise UsageError(f"the {cfg['setup']} setup needs --dataset")
    if command in ("tune", "evaluate"):
        algo = cfg["algo"]
        if algo == "balapinc" and cfg["ppmi"] is None:
            raise UsageError("balapinc needs --ppmi")
        if algo == "convecs" and cfg["embedding"] is None and cfg["ppmi"] is None:
            raise UsageError("convecs needs --embedding or --ppmi")
        if algo == "simdiffs":
            emb = cfg["domain_embedding"] is not None and cfg["function_embedding"] is not None
            mats = cfg["domain_ppmi"] is not None and cfg["function_ppmi"] is not None
            if not (emb or mats):
                raise UsageError("simdiffs needs --domain-/--function-embedding "
                                 "or --domain-/--function-ppmi")
        if cfg["kernel"] not in (None, "polynomial", "rbf"):
            raise UsageError("--kernel must be polynomial or rbf")


def _checksum(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _input_paths(command, cfg) -> dict:
    paths = {}
    for name, _, _, is_path, _ in COMMANDS[command]:
        if is_path and cfg.get(name) is not None:
            paths[name] = cfg[name]
            # matrices carry label sidecars
            for suffix in (".rows", ".cols"):
                if os.path.exists(cfg[name] + suffix):
                    paths[name + suffix] = cfg[name] + suffix
    return paths


def _jsonable(cfg):
    return {k: list(v) if isinstance(v, tuple) else v for k, v in cfg.items()}


# -- commands -----------------------------------------------------------------

def _write(run: Path, name: str, text: str) -> str:
    vsm._atomic_write(run / name, text)
    return name


def cmd_ingest(cfg, run: Path):
    vocab = vsm.Vocabulary.load(cfg["vocab"])
    contexts = vsm.Vocabulary.load(cfg["contexts"]) if cfg["contexts"] else None
    with open(cfg["corpus"], encoding="utf-8") as fh:
        corpus = [line.rstrip("\n") for line in fh]
    counts = vsm.count_cooccurrences(corpus, vocab, cfg["window"], cfg["policy"], contexts)
    vsm.save_matrix(counts, run / "counts.mat")
    summary = (f"rows={len(counts.rows)}\ncols={len(counts.cols)}\nnnz={counts.nnz}\n"
               f"oov_tokens={counts.oov_tokens}\n")
    return ["counts.mat", "counts.mat.rows", "counts.mat.cols", _write(run, "summary.kv", summary)]


def cmd_ppmi(cfg, run: Path):
    counts = vsm.load_matrix(cfg["counts"])
    if not isinstance(counts, vsm.CoMatrix):
        raise DataError(f"{cfg['counts']} is not a count matrix")
    X = vsm.ppmi(counts)
    vsm.save_matrix(X, run / "ppmi.mat")
    summary = f"rows={X.shape[0]}\ncols={X.shape[1]}\ndensity={float(X.density)!r}\n"
    return ["ppmi.mat", "ppmi.mat.rows", "ppmi.mat.cols", _write(run, "summary.kv", summary)]


def _load_ppmi(path) -> vsm.PpmiMatrix:
    X = vsm.load_matrix(path)
    if not isinstance(X, vsm.PpmiMatrix):
        raise DataError(f"{path} is not a PPMI matrix")
    return X


def cmd_svd(cfg, run: Path):
    X = _load_ppmi(cfg["ppmi"])
    factors = vsm.truncated_svd(X, cfg["k"], cfg["seed"])
    emb = vsm.project(factors, cfg["p"], cfg["space"])
    vsm.save_embedding(emb, run / "embedding.txt")
    sig = "".join(f"{float(s)!r}\n" for s in factors.sigma)
    return ["embedding.txt", _write(run, "sigma.txt", sig)]


def cmd_transform_jmth(cfg, run: Path):
    rated = datasets.load_rated_pairs(cfg["rated"])
    taxonomy = datasets.RelationTaxonomy.load(cfg["taxonomy"])
    pairs, report = datasets.jmth_transform(rated, taxonomy, cfg["seed"], cfg["n_remove"])
    datasets.save_pairs(pairs, run / "jmth.tsv")
    outputs = ["jmth.tsv", _write(run, "report.kv", report.lines())]
    if cfg["split"]:
        dev1, dev2, test, sreport = datasets.split_dev_test(pairs, cfg["seed"])
        for name, part in (("dev1.tsv", dev1), ("dev2.tsv", dev2), ("test.tsv", test)):
            datasets.save_pairs(part, run / name)
            outputs.append(name)
        text = "".join(f"{n}={s} ones={o} zeros={z}\n" for n, s, o, z in
                       zip(("dev1", "dev2", "test"), sreport.sizes, sreport.ones, sreport.zeros))
        outputs.append(_write(run, "split.kv", text))
    return outputs


def _svm_setup(cfg):
    default = "polynomial" if cfg["algo"] == "convecs" else "rbf"
    kind = cfg["kernel"] or default
    kernel = (svm.Kernel.polynomial(cfg["degree"]) if kind == "polynomial"
              else svm.Kernel.rbf(cfg["gamma"]))
    return kernel, svm.TrainConfig(C=cfg["C"], seed=cfg["seed"])


def _refs(cfg, *embs) -> ReferenceSet:
    refs = ReferenceSet.load(cfg["refs"])
    refs = refs.restrict(*embs)
    if len(refs) == 0:
        raise DataError("no reference word occurs in the embeddings")
    return refs


def _usable_ks(ks, X):
    limit = min(X.shape)
    kept = tuple(k for k in ks if k <= limit)
    if not kept:
        raise DataError(f"every grid k exceeds the matrix rank bound {limit}")
    if len(kept) < len(ks):
        logger.warning("dropping grid k values above %d", limit)
    return kept


def _restrict(pairs, method, where):
    keep, skip = experiments.known_pairs(pairs, method)
    if skip:
        logger.warning("%s: skipping %d of %d pairs with unknown terms", where, len(skip), len(pairs))
    if not keep:
        raise DataError(f"{where}: no pair has both terms in the vector space")
    return keep, skip


def cmd_tune(cfg, run: Path):
    dev1 = datasets.load_pairs(cfg["dev1"])
    dev2 = datasets.load_pairs(cfg["dev2"])
    algo = cfg["algo"]
    lines = [f"algo={algo}"]
    grid_lines = []
    if algo == "balapinc":
        X = _load_ppmi(cfg["ppmi"])
        probe = experiments.BalapincMethod(X)
        dev1, _ = _restrict(dev1, probe, "dev1")
        dev2, _ = _restrict(dev2, probe, "dev2")
        params = experiments.tune_balapinc(dev1, dev2, X, cfg["grid_max_f"])
        lines += [f"max_f={params.max_F}", f"T={float(params.T)!r}"]
    else:
        kernel, config = _svm_setup(cfg)
        if algo == "convecs":
            if cfg["ppmi"] is None:
                raise UsageError("tuning convecs needs --ppmi")
            X = _load_ppmi(cfg["ppmi"])
            ks = _usable_ks(cfg["grid_k"], X)
            factors = vsm.truncated_svd(X, max(ks), cfg["seed"])
            probe = experiments.ConvecsMethod(vsm.project(factors.truncate(min(ks)), 1.0))
            refs = None
        else:
            if cfg["domain_ppmi"] is None or cfg["function_ppmi"] is None:
                raise UsageError("tuning simdiffs needs --domain-ppmi and --function-ppmi")
            D, F = _load_ppmi(cfg["domain_ppmi"]), _load_ppmi(cfg["function_ppmi"])
            ks = _usable_ks(cfg["grid_k"], D)
            ks = _usable_ks(ks, F)
            df = vsm.truncated_svd(D, max(ks), cfg["seed"])
            ff = vsm.truncated_svd(F, max(ks), cfg["seed"])
            factors = (df, ff)
            d0 = vsm.project(df.truncate(min(ks)), 1.0, "domain")
            f0 = vsm.project(ff.truncate(min(ks)), 1.0, "function")
            refs = _refs(cfg, d0, f0)
            probe = experiments.SimdiffsMethod(SimDiffsSpace(d0, f0, refs))
        dev1, _ = _restrict(dev1, probe, "dev1")
        dev2, _ = _restrict(dev2, probe, "dev2")
        k, p, points = experiments.tune_svd_grid(dev1, dev2, algo, factors, refs, ks,
                                                 cfg["grid_p"], kernel, config)
        lines += [f"k={k}", f"p={float(p)!r}"]
        grid_lines = ["k\tp\tf\tacc"] + [f"{g.k}\t{float(g.p)!r}\t{g.f:.6f}\t{g.acc:.4f}" for g in points]
    outputs = [_write(run, "params.kv", "\n".join(lines) + "\n")]
    if grid_lines:
        outputs.append(_write(run, "grid.tsv", "\n".join(grid_lines) + "\n"))
    return outputs


def _build_method(cfg):
    algo = cfg["algo"]
    if algo == "balapinc":
        return experiments.BalapincMethod(_load_ppmi(cfg["ppmi"]), cfg["max_f"])
    kernel, config = _svm_setup(cfg)

    def embedding(path, mat, space):
        if path is not None:
            emb = vsm.load_embedding(path)
            if cfg["k"] is not None and cfg["k"] != emb.k:
                logger.warning("ignoring --k %s; %s has k=%d", cfg["k"], path, emb.k)
            return emb
        if cfg["k"] is None or cfg["p"] is None:
            raise UsageError("building embeddings from PPMI needs --k and --p")
        X = _load_ppmi(mat)
        return vsm.project(vsm.truncated_svd(X, cfg["k"], cfg["seed"]), cfg["p"], space)

    if algo == "convecs":
        return experiments.ConvecsMethod(embedding(cfg["embedding"], cfg["ppmi"], "general"),
                                         kernel, config)
    dom = embedding(cfg["domain_embedding"], cfg["domain_ppmi"], "domain")
    fun = embedding(cfg["function_embedding"], cfg["function_ppmi"], "function")
    return experiments.SimdiffsMethod(SimDiffsSpace(dom, fun, _refs(cfg, dom, fun)),
                                      kernel, config)


def cmd_evaluate(cfg, run: Path):
    method = _build_method(cfg)
    setup = cfg["setup"]
    test = None
    if setup == "different":
        dataset, _ = _restrict(datasets.load_pairs(cfg["train"]), method, "train")
        test, _ = _restrict(datasets.load_pairs(cfg["test"]), method, "test")
    else:
        dataset, _ = _restrict(datasets.load_pairs(cfg["dataset"]), method, "dataset")
    result = experiments.cross_validate(dataset, method.fit, setup, cfg["folds"],
                                        cfg["seed"], test)
    header = f"algo={cfg['algo']}\nsetup={setup}\nseed={cfg['seed']}\nn={result.report.confusion.total}\n"
    fold_lines = ["fold\tacc\tf\tap0\tap1"]
    for i, r in enumerate(result.fold_reports):
        fold_lines.append(f"{i}\t{r.acc:.4f}\t{r.f:.6f}\t{_fmt(r.ap0)}\t{_fmt(r.ap1)}")
    scores = ["a\tb\tlabel\tscore"]
    pool = test if setup == "different" else dataset
    order = [i for _, idx in result.plan.splits() for i in idx]
    for i, s in zip(order, result.scores):
        scores.append(f"{pool[i].a}\t{pool[i].b}\t{pool[i].label}\t{float(s)!r}")
    return [_write(run, "report.kv", header + result.report.to_kv()),
            _write(run, "report.txt", result.report.table()),
            _write(run, "folds.tsv", "\n".join(fold_lines) + "\n"),
            _write(run, "scores.tsv", "\n".join(scores) + "\n")]


def _fmt(x):
    return "nan" if x is None else f"{x:.6f}"


HANDLERS = {"ingest": cmd_ingest, "ppmi": cmd_ppmi, "svd": cmd_svd,
            "transform-jmth": cmd_transform_jmth, "tune": cmd_tune, "evaluate": cmd_evaluate}


# -- driver -------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


_SUMMARIES = {
    "ingest": "count word-context co-occurrences in a corpus",
    "ppmi": "weight a count matrix with positive PMI",
    "svd": "project a PPMI matrix with a truncated SVD",
    "transform-jmth": "turn rated relation pairs into a balanced labeled dataset",
    "tune": "pick hyperparameters on two dev sets",
    "evaluate": "cross-validate or train/test one algorithm",
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lexent", description="Lexical entailment experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="command")
    for command, spec in COMMANDS.items():
        sp = sub.add_parser(command, help=_SUMMARIES[command])
        sp.add_argument("--config", help="key = value file; flags override it")
        for name, typ, default, _, help_text in spec + _COMMON:
            shown = "" if default is None else f" (default: {default})"
            sp.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None,
                            help=help_text + shown)
    rerun = sub.add_parser("rerun", help="repeat a run from its manifest")
    rerun.add_argument("manifest")
    rerun.add_argument("--run-dir", dest="run_dir")
    rerun.add_argument("--runs", default="runs")
    return parser


def _make_run_dir(cfg) -> Path:
    if cfg.get("run_dir"):
        run = Path(cfg["run_dir"])
    else:
        stamp = time.strftime("%Y%m%dT%H%M%S")
        run = Path(cfg["runs"]) / f"{stamp}-seed{cfg['seed']}"
        n = 1
        while run.exists():
            run = Path(cfg["runs"]) / f"{stamp}-seed{cfg['seed']}-{n}"
            n += 1
    run.mkdir(parents=True, exist_ok=True)
    return run


def execute(command: str, cfg: dict) -> Path:
    validate(command, cfg)
    inputs = {name: {"path": os.path.abspath(p), "sha256": _checksum(p)}
              for name, p in _input_paths(command, cfg).items()}
    run = _make_run_dir(cfg)
    outputs = HANDLERS[command](cfg, run)
    manifest = {
        "command": command,
        "config": _jsonable({k: v for k, v in cfg.items() if k not in ("runs", "run_dir")}),
        "seed": cfg["seed"],
        "inputs": inputs,
        "outputs": {name: _checksum(run / name) for name in outputs},
        "versions": {"lexent": _version(), "numpy": np.__version__},
    }
    vsm._atomic_write(run / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return run


def _version():
    from . import __version__
    return __version__


def rerun(manifest_path, run_dir=None, runs="runs") -> Path:
    try:
        manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
        command, cfg = manifest["command"], manifest["config"]
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read manifest {manifest_path}: {exc}") from None
    if command not in COMMANDS:
        raise UsageError(f"manifest names unknown command {command!r}")
    for name, info in manifest.get("inputs", {}).items():
        if not os.path.exists(info["path"]):
            raise UsageError(f"input {name} is missing: {info['path']}")
        if _checksum(info["path"]) != info["sha256"]:
            raise DataError(f"input {name} changed since the original run: {info['path']}")
    spec = {name: typ for name, typ, *_ in COMMANDS[command] + _COMMON}
    cfg = {k: (tuple(v) if isinstance(v, list) else v) for k, v in cfg.items() if k in spec}
    cfg.update(runs=runs, run_dir=run_dir)
    for name, _, default, _, _ in COMMANDS[command] + _COMMON:
        cfg.setdefault(name, default)
    return execute(command, cfg)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verbose:
            logging.getLogger().setLevel(logging.INFO)
        if args.command is None:
            parser.print_help()
            return EXIT_USAGE
        if args.command == "rerun":
            run = rerun(args.manifest, args.run_dir, args.runs)
        else:
            flags = vars(args).copy()
            config = read_config(flags.pop("config")) if args.config else {}
            cfg = resolve(args.command, flags, config)
            run = execute(args.command, cfg)
    except UsageError as exc:
        print(f"lexent: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (svm.TrainingError, svm.CalibrationError, np.linalg.LinAlgError,
            FloatingPointError, ArithmeticError) as exc:
        print(f"lexent: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, ValueError, KeyError, OSError) as exc:
        print(f"lexent: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(run)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
