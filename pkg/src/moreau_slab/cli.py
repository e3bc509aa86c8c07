"""Command line entry point: ``moreau-slab {simulate,fit,validate,eb}``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

from .dataio import DataFormatError, atomic_output_dir, load_csv, write_dataset, write_report
from .harness import ConfigError, RunConfig, eb_compare, fit_dataset, replicate, validation_suite
from .scenario import gen_scenario

OUTPUT_ENV = "MOREAU_SLAB_OUTPUT_DIR"
DEFAULT_OUTPUT = "moreau_slab_output"

EXIT_OK, EXIT_IO, EXIT_VALIDATION = 0, 1, 2

log = logging.getLogger("moreau_slab")


def _add_common(p):
    p.add_argument("--config", help="flat key = value file; command line flags win")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help=f"output directory (else ${OUTPUT_ENV}, config, ./{DEFAULT_OUTPUT})")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_sampler(p):
    p.add_argument("--n-iter", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--gamma0", type=float)
    p.add_argument("--thin", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--u", type=float)
    p.add_argument("--mala-step", type=float)
    p.add_argument("--drift-cap", type=float)
    p.add_argument("--no-traces", dest="write_traces", action="store_false", default=None)


def _add_scenario(p):
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--s-star", type=int)
    p.add_argument("--signal", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--replications", type=int)
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="moreau-slab",
                                     description="Spike-and-slab regression via Moreau envelope approximations.")
    sub = parser.add_subparsers(dest="mode", required=True)

    p = sub.add_parser("simulate", help="replicated runs on synthetic AR-design scenarios")
    _add_common(p)
    _add_scenario(p)
    _add_sampler(p)
    p.add_argument("--sigma2", type=float, help="noise variance given to the sampler (default: the true one)")
    p.add_argument("--save-data", action="store_true", help="also write X.csv and z.csv of the first replication")

    p = sub.add_parser("fit", help="fit a CSV dataset")
    _add_common(p)
    _add_sampler(p)
    p.add_argument("--x", dest="x_path", help="design CSV with a header row")
    p.add_argument("--z", dest="z_path", help="response CSV with a header row and one column")
    p.add_argument("--sigma2", type=float, help="noise variance; omitted means a cross-validated lasso plug-in")
    p.add_argument("--folds", type=int)

    p = sub.add_parser("validate", help="fast self-checks against analytic and brute-force references")
    _add_common(p)

    p = sub.add_parser("eb", help="compare plug-in and known noise variance over replications")
    _add_common(p)
    _add_scenario(p)
    _add_sampler(p)
    p.add_argument("--folds", type=int)
    return parser


def resolve_config(args) -> tuple:
    """Defaults, then config file, then environment (output dir only), then flags."""
    from .harness import load_config_file

    values = {}
    if args.config:
        values.update(load_config_file(args.config))
    names = {f.name for f in fields(RunConfig)}
    flags = {k: v for k, v in vars(args).items() if k in names and v is not None}
    out = flags.pop("out", None) or os.environ.get(OUTPUT_ENV) or values.pop("out", None) or DEFAULT_OUTPUT
    values.pop("out", None)
    values.update(flags)
    values["mode"] = args.mode
    if values.get("seed") is None and args.mode == "validate":
        values["seed"] = 0
    cfg = RunConfig(**values)
    cfg.out = str(out)
    return cfg.validate(), Path(out)


def _run(cfg: RunConfig, out: Path, save_data: bool) -> int:
    with atomic_output_dir(out) as tmp:
        if cfg.mode == "simulate":
            report = replicate(cfg, tmp)
            if save_data:
                from .harness import replication_seeds

                data, truth = gen_scenario(cfg.scenario(replication_seeds(cfg.seed, 1)[0]))
                write_dataset(tmp, data)
            status = EXIT_OK
        elif cfg.mode == "fit":
            data = load_csv(cfg.x_path, cfg.z_path)
            report = fit_dataset(cfg, data, tmp / "trace.jsonl" if cfg.write_traces else None)
            status = EXIT_OK
        elif cfg.mode == "eb":
            report = eb_compare(cfg)
            status = EXIT_OK
        else:
            report = validation_suite(cfg.seed)
            for c in report["checks"]:
                log.info("%s %s", "PASS" if c["passed"] else "FAIL", c["name"])
            status = EXIT_OK if report["passed"] else EXIT_VALIDATION
        write_report(tmp / "report.json", report)
    return status


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose or args.mode == "validate" else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        cfg, out = resolve_config(args)
        status = _run(cfg, out, getattr(args, "save_data", False))
    except (ConfigError, DataFormatError, OSError) as exc:
        print(f"moreau-slab: error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(out / "report.json")
    return status


if __name__ == "__main__":
    sys.exit(main())
