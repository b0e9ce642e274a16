"""Command-line interface for fitting and checking Fourier-diagonal operators.

Subcommands: generate, fit, eval, sweep, verify. Each reads an optional INI
config (``--config``) plus ``--set section.key=value`` overrides, writes its
outputs under ``--out`` together with the fully resolved config, and exits
with 0 (success), 2 (configuration or input error), 3 (a numerical check
failed) or 4 (I/O error).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import formats
from .bench.adversarial import high_mode_counterexample, verify_lower_bound
from .bench.lemmas import run_lemma_suite
from .bench.sweeps import ExperimentConfig, sweep_discretization, sweep_statistical, sweep_truncation
from .config import ConfigError, RunConfig
from .errors import FourlinError, NonConvergenceError
from .estimator import FitConfig, fit, relative_mse
from .operators import Dataset, generate_dataset, synthesize_random_operator
from .random_fields import GrfConfig, derive_seed
from .spectral import GridSpec

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_IO = 0, 2, 3, 4
MANIFEST_FORMAT = "fourlin-dataset-1"
EVAL_HEADER = ["config_hash", "n", "N", "K", "rel_mse"]

log = logging.getLogger("fourlin")


class VerificationFailed(Exception):
    pass


def _write_resolved(out: Path, cfg: RunConfig, sections):
    formats.atomic_write(out / "resolved.ini", cfg.dumps(["run", *sections]).encode("utf-8"))


def cmd_generate(cfg: RunConfig, out: Path) -> int:
    p, seed = cfg["data"], cfg["run"]["seed"]
    spec = GridSpec(p["d"], p["N"])
    K_star = (p["N"] - 1) // 2 if p["K_star"] is None else p["K_star"]
    T_star = synthesize_random_operator(p["d"], K_star, p["bound"], derive_seed(seed, 1))
    data = generate_dataset(T_star, GrfConfig(spec, p["gamma"], p["sigma"]), p["noise"], p["n"], derive_seed(seed, 2))
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for i, (v, w) in enumerate(data.pairs):
        formats.write_field(out / f"v_{i}.flf", v)
        formats.write_field(out / f"w_{i}.flf", w)
        files.append([f"v_{i}.flf", f"w_{i}.flf"])
    formats.write_operator(out / "T_star.fop", T_star)
    manifest = {
        "format": MANIFEST_FORMAT,
        "d": spec.d,
        "N": spec.N,
        "n": data.n,
        "pairs": files,
        "operator": "T_star.fop",
        "seed": seed,
        "seeds": {"operator": derive_seed(seed, 1), "data": derive_seed(seed, 2)},
        "config_hash": cfg.digest(["run", "data"]),
    }
    formats.write_json(out / "manifest.json", manifest)
    _write_resolved(out, cfg, ["data"])
    log.info("wrote %d pairs to %s", data.n, out)
    return EXIT_OK


def load_manifest(path) -> tuple[dict, Dataset]:
    path = Path(path)
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed manifest ({exc})") from exc
    if manifest.get("format") != MANIFEST_FORMAT:
        raise ConfigError(f"{path}: not a {MANIFEST_FORMAT} manifest")
    pairs = manifest.get("pairs") or []
    if not pairs:
        raise ConfigError(f"{path}: dataset is empty")
    fields = [(formats.read_field(path.parent / v), formats.read_field(path.parent / w)) for v, w in pairs]
    data = Dataset.from_pairs(fields)
    if data.spec != GridSpec(manifest["d"], manifest["N"]):
        raise ConfigError(f"{path}: field files do not match the declared grid")
    return manifest, data


def cmd_fit(cfg: RunConfig, out: Path) -> int:
    p = cfg["fit"]
    _, data = load_manifest(p["manifest"])
    fc = FitConfig(
        K=p["K"], C=p["C"], method=p["method"], step_size=p["step_size"],
        batch_size=p["batch_size"], epochs=p["epochs"], seed=p["seed"],
    )
    res = fit(data, fc)
    out.mkdir(parents=True, exist_ok=True)
    formats.write_operator(out / "operator.fop", res.operator)
    record = res.as_record() | {"config_hash": cfg.digest(["run", "fit"])}
    formats.write_jsonl(out / "diagnostics.jsonl", [record])
    _write_resolved(out, cfg, ["fit"])
    log.info("objective %.6g, %d clipped, %d degenerate", res.objective, res.modes_clipped, res.modes_degenerate)
    return EXIT_OK


def cmd_eval(cfg: RunConfig, out: Path) -> int:
    p = cfg["eval"]
    T = formats.read_operator(p["operator"])
    _, test = load_manifest(p["manifest"])
    if T.d != test.spec.d:
        raise ConfigError(f"operator is {T.d}-D but test data is {test.spec.d}-D")
    err = relative_mse(T, test, squared=p["squared"])
    csv_path = Path(p["csv"])
    if not csv_path.is_absolute():
        csv_path = out / csv_path
    formats.append_csv_row(csv_path, EVAL_HEADER, [cfg.digest(["run", "eval"]), test.n, test.spec.N, T.K, float(err)])
    _write_resolved(out, cfg, ["eval"])
    print(formats.fmt_float(err))
    return EXIT_OK


def experiment_config(cfg: RunConfig) -> ExperimentConfig:
    p = cfg["sweep"]
    return ExperimentConfig(
        d=p["d"], N=p["N"], K=p["K"], gamma=p["gamma"], sigma=p["sigma"], bound=p["bound"], C=p["C"],
        noise=p["noise"], test_noise=p["test_noise"], n_train=p["n_train"], n_test=p["n_test"],
        seeds=p["seeds"], seed=cfg["run"]["seed"], redraw_operator=p["redraw_operator"], squared=p["squared"],
    )


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    p = cfg["sweep"]
    exp = experiment_config(cfg)
    if p["kind"] == "statistical":
        curve = sweep_statistical(exp, p["n_list"])
    elif p["kind"] == "truncation":
        curve = sweep_truncation(exp, p["K_list"], seeds=1)
    else:
        curve = sweep_discretization(exp, p["N_list"], p["N_test"], seeds=1)
    out.mkdir(parents=True, exist_ok=True)
    curve.to_csv(out / f"sweep_{p['kind']}.csv")
    formats.write_json(out / f"sweep_{p['kind']}.json", {"meta": curve.meta, "values": curve.values, "params": curve.params})
    _write_resolved(out, cfg, ["sweep"])
    for name, value, mean, std in [(curve.parameter_name, *pt) for pt in curve.points]:
        log.info("%s=%d  mean=%.4g  std=%.3g", name, value, mean, std)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    p, seed = cfg["verify"], cfg["run"]["seed"]
    reports = run_lemma_suite(draws=p["draws"], s=p["s"], seed=seed)
    reports.append(high_mode_counterexample(p["counterexample_K"], [1, 10]))
    for n, N, K in p["lower_bound"]:
        reports.append(verify_lower_bound(n, N, K, p["s"], p["B"], p["trials"], seed=seed))
    out.mkdir(parents=True, exist_ok=True)
    formats.write_jsonl(out / "verify.jsonl", [r.as_record() for r in reports])
    _write_resolved(out, cfg, ["verify"])
    failed = [r for r in reports if not r.passed]
    for r in reports:
        log.info("%-26s %s", r.name, "pass" if r.passed else "FAIL")
    if failed:
        for r in failed:
            print(json.dumps({"check": r.name, "violations": r.violations[:5]}, default=str), file=sys.stderr)
        raise VerificationFailed(", ".join(r.name for r in failed))
    return EXIT_OK


COMMANDS = {
    "generate": (cmd_generate, "synthesize a dataset as FLF1 files plus a manifest"),
    "fit": (cmd_fit, "fit a diagonal Fourier operator to a dataset"),
    "eval": (cmd_eval, "append the relative MSE of an operator on a dataset to a CSV"),
    "sweep": (cmd_sweep, "run an error sweep over n, K or N and write a CSV curve"),
    "verify": (cmd_verify, "run the lemma checks and lower-bound harness"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fourlin", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.add_argument("--config", metavar="PATH", help="INI file with [run] and per-command sections")
        sp.add_argument("--set", metavar="SECTION.KEY=VALUE", action="append", default=[], help="override one config value (repeatable)")
        sp.add_argument("--out", metavar="DIR", default=".", help="output directory (default: current directory)")
        sp.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    func = COMMANDS[args.command][0]
    try:
        cfg = RunConfig.load(args.config, args.set)
        return func(cfg, Path(args.out))
    except VerificationFailed as exc:
        print(f"fourlin: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except NonConvergenceError as exc:
        print(f"fourlin: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except OSError as exc:
        print(f"fourlin: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FourlinError, ValueError) as exc:
        print(f"fourlin: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
