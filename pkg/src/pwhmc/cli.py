"""Command-line surface: validate / sample / diagnose.

Exit codes: 0 success, 1 model or content failure, 2 I/O or parse failure,
3 runtime sampling failure.  Every sample run writes a manifest sidecar so
the outputs can be reproduced bit for bit.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ContractError, ModelFormatError, StallError
from .model import ell, load_model_file, min_slack, validate_model
from .sampler import ChainConfig, initial_point_check, run_chain

EXIT_OK = 0
EXIT_CONTENT = 1
EXIT_IO = 2
EXIT_RUNTIME = 3


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to replay one chain's outputs exactly."""

    model: str
    seed: list
    t_max: float
    n_samples: int
    burn_in: int
    thin: int
    region: int
    init: list
    samples_path: str
    events_path: str | None
    version: str

    def dump(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(dataclasses.asdict(self), fh, indent=1)
            fh.write("\n")


def _load(model_path):
    try:
        return load_model_file(model_path)
    except OSError as exc:
        raise SystemExit(_fail(EXIT_IO, f"cannot read model: {exc}"))
    except ModelFormatError as exc:
        raise SystemExit(_fail(EXIT_IO, f"bad model document: {exc}"))


def _fail(code, message):
    print(message, file=sys.stderr)
    return code


def _resolve_start(spec, args):
    region = args.region if args.region is not None else spec.init_region
    if args.init is not None:
        x0 = np.array([float(v) for v in args.init.split(",")])
    else:
        x0 = spec.init_point
    if region is None or x0 is None:
        raise SystemExit(_fail(
            EXIT_CONTENT,
            "no starting state: pass --region and --init or add an 'init' "
            "block to the model document",
        ))
    if x0.shape != (spec.n,):
        raise SystemExit(_fail(
            EXIT_CONTENT, f"--init must have {spec.n} components"))
    if not 1 <= region <= spec.J:
        raise SystemExit(_fail(
            EXIT_CONTENT, f"--region must be in 1..{spec.J}"))
    return int(region), x0


def _write_samples(path, spec, cfg, out):
    header = ",".join([f"x{i + 1}" for i in range(spec.n)] + ["region", "iterate"])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in range(out.X.shape[0]):
            iterate = cfg.burn_in + cfg.thin * (row + 1) - 1
            cells = ["%.17g" % v for v in out.X[row]]
            cells.append(str(int(out.R[row])))
            cells.append(str(iterate))
            fh.write(",".join(cells) + "\n")


def _write_events(path, events):
    with open(path, "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(json.dumps(ev) + "\n")


def _chain_paths(base, chain, n_chains):
    if n_chains == 1:
        return Path(base)
    p = Path(base)
    return p.with_name(f"{p.stem}.chain{chain}{p.suffix}")


def cmd_validate(args):
    spec = _load(args.model)
    report = validate_model(spec, tol=args.tol if args.tol else 1e-8)
    print(report.format())
    n_fail = len(report.failures())
    print(f"{len(report.checks) - n_fail}/{len(report.checks)} checks passed")
    return EXIT_OK if report.passed else EXIT_CONTENT


def cmd_sample(args):
    spec = _load(args.model)
    report = validate_model(spec)
    if not report.passed:
        for c in report.failures():
            print(c.format(), file=sys.stderr)
        return _fail(EXIT_CONTENT, "model failed validation")
    region, x0 = _resolve_start(spec, args)
    tol = args.tol if args.tol else 1e-8
    check = initial_point_check(spec, region, x0, tol=tol)
    if not check.passed:
        return _fail(EXIT_CONTENT, check.format())

    def one_chain(chain):
        seed_seq = np.random.SeedSequence([args.seed, chain]) \
            if args.chains > 1 else np.random.SeedSequence(args.seed)
        cfg = ChainConfig(
            n_samples=args.n, seed=seed_seq, t_max=args.tmax,
            burn_in=args.burnin, thin=args.thin,
            record_events=args.events is not None,
        )
        out = run_chain(spec, region, x0, cfg)
        samples_path = _chain_paths(args.out, chain, args.chains)
        _write_samples(samples_path, spec, cfg, out)
        events_path = None
        if args.events is not None:
            events_path = _chain_paths(args.events, chain, args.chains)
            _write_events(events_path, out.events)
        manifest = RunManifest(
            model=str(args.model),
            seed=[args.seed, chain] if args.chains > 1 else [args.seed],
            t_max=args.tmax, n_samples=args.n, burn_in=args.burnin,
            thin=args.thin, region=region, init=[float(v) for v in x0],
            samples_path=str(samples_path),
            events_path=None if events_path is None else str(events_path),
            version=__version__,
        )
        manifest.dump(str(samples_path) + ".manifest.json")
        return samples_path

    try:
        if args.chains == 1:
            one_chain(0)
        else:
            with ThreadPoolExecutor(max_workers=args.chains) as pool:
                list(pool.map(one_chain, range(args.chains)))
    except StallError as exc:
        return _fail(EXIT_RUNTIME, f"sampling stalled: {exc} {exc.context}")
    except ContractError as exc:
        return _fail(EXIT_CONTENT, str(exc))
    except ValueError as exc:
        return _fail(EXIT_CONTENT, str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write output: {exc}")
    return EXIT_OK


def cmd_diagnose(args):
    spec = _load(args.model)
    report = validate_model(spec)
    if not report.passed:
        for c in report.failures():
            print(c.format(), file=sys.stderr)
        return _fail(EXIT_CONTENT, "model failed validation")
    region, x0 = _resolve_start(spec, args)
    check = initial_point_check(spec, region, x0,
                                tol=args.tol if args.tol else 1e-8)
    if not check.passed:
        return _fail(EXIT_CONTENT, check.format())

    try:
        cfg = ChainConfig(n_samples=args.n, seed=np.random.SeedSequence(args.seed),
                          t_max=args.tmax, record_events=True)
        out = run_chain(spec, region, x0, cfg)
    except ValueError as exc:
        return _fail(EXIT_CONTENT, str(exc))
    except StallError as exc:
        return _fail(EXIT_RUNTIME, f"sampling stalled: {exc} {exc.context}")

    resid = max(
        float(np.linalg.norm(ell(spec, int(out.R[i]), out.X[i])))
        for i in range(out.X.shape[0])
    )
    violation = max(
        max(0.0, -min_slack(spec, int(out.R[i]), out.X[i]))
        for i in range(out.X.shape[0])
    )

    drift = 0.0
    per_iter = {}
    for ev in out.events:
        first, last = per_iter.get(ev["iterate"], (None, None))
        if first is None:
            first = ev["energy_pre"]
        per_iter[ev["iterate"]] = (first, ev["energy_post"])
    for first, last in per_iter.values():
        scale = max(1.0, abs(first))
        drift = max(drift, abs(last - first) / scale)

    occupancy = np.bincount(out.R, minlength=spec.J + 1)[1:]
    ac = []
    for kcol in range(spec.n):
        col = out.X[:, kcol]
        c0, c1 = col[:-1], col[1:]
        sd0, sd1 = c0.std(), c1.std()
        if sd0 == 0.0 or sd1 == 0.0:
            ac.append(0.0)
        else:
            ac.append(float(np.corrcoef(c0, c1)[0, 1]))

    identity_mass = all(
        np.allclose(spec.M[jz], np.eye(spec.n)) for jz in range(spec.J)
    )

    print(f"iterates:                {cfg.n_iterates}")
    print(f"boundary events:         {len(out.events)}")
    print(f"max manifold residual:   {resid:.3e}")
    print(f"max constraint breach:   {violation:.3e}")
    print(f"max energy drift (rel):  {drift:.3e}")
    if not identity_mass:
        print("  (drift tracks the Euclidean energy, which is invariant "
              "only under identity mass matrices)")
    print("region occupancy:        "
          + " ".join(f"{j + 1}:{c}" for j, c in enumerate(occupancy)))
    print("lag-1 autocorrelation:   "
          + " ".join(f"{v:+.3f}" for v in ac))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="pwhmc",
        description="Exact HMC on piecewise Gaussian densities restricted "
                    "to a piecewise affine constraint manifold.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="structural checks on a model document")
    p_val.add_argument("model")
    p_val.add_argument("--tol", type=float, default=None,
                       help="continuity tolerance (default 1e-8)")
    p_val.set_defaults(func=cmd_validate)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("model")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tmax", type=float, default=float(np.pi / 2))
    common.add_argument("--region", type=int, default=None,
                        help="starting region (1-based)")
    common.add_argument("--init", type=str, default=None,
                        help="starting point, comma-separated decimals")
    common.add_argument("--tol", type=float, default=None,
                        help="initial-point tolerance (default 1e-8)")

    p_smp = sub.add_parser("sample", parents=[common],
                           help="run chains and write sample files")
    p_smp.add_argument("--n", type=int, required=True,
                       help="kept iterates per chain")
    p_smp.add_argument("--burnin", type=int, default=0)
    p_smp.add_argument("--thin", type=int, default=1)
    p_smp.add_argument("--out", type=str, required=True)
    p_smp.add_argument("--events", type=str, default=None,
                       help="also write a boundary-event log (JSON lines)")
    p_smp.add_argument("--chains", type=int, default=1)
    p_smp.set_defaults(func=cmd_sample)

    p_dia = sub.add_parser("diagnose", parents=[common],
                           help="short run with invariant diagnostics")
    p_dia.add_argument("--n", type=int, default=2000)
    p_dia.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
