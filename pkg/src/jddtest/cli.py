"""Command-line interface.

Subcommands:

* ``test``:         run the joint two-sample test on two sample CSVs
* ``threshold``:    tabulate critical values over (alpha, m) grids
* ``mnist-sweep``:  the rotated-digit experiment: JDD vs rotation angle
* ``calibrate``:    empirical null rejection rate with a seeded generator
* ``rademacher``:   Monte Carlo check of the signed-supremum ordering chain

Every CSV output starts with ``#`` manifest comments (command, version,
flags, seeds, input digests, timestamp) followed by an exact header line;
numbers are printed with full round-trip precision and ``\\n`` newlines.
Commands taking ``--seed`` are bit-reproducible end to end; set
SOURCE_DATE_EPOCH to pin the manifest timestamp for byte-identical reruns.
``--plot PATH.png`` renders the matching figure next to the delimited data.

Exit codes: 0 accept/success, 3 reject (a successful run, hence distinct
from errors), 4 internal-bound violation, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .discrepancy import (
    PairedSample,
    jdd_biased,
    mmd_biased,
    rademacher_jensen_bound,
    rademacher_mc_estimate,
)
from .errors import BoundViolationError, InputError
from .kernels import ExplicitLinearKernel, KernelSpec, RbfKernel
from .mnist import load_idx, sample_class
from .rng import pack_stream
from .sampleio import read_sample_csv
from .shift_test import (
    TestConfig,
    calibrate_null,
    critical_value,
    gaussian_null_sampler,
    rejects,
    run_test,
    threshold_grid,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_REJECT = 3
EXIT_BOUND_VIOLATION = 4

DEFAULT_SIGMA = 0.25


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _timestamp() -> str:
    pinned = os.environ.get("SOURCE_DATE_EPOCH")
    moment = int(pinned) if pinned else int(time.time())
    return datetime.fromtimestamp(moment, tz=timezone.utc).isoformat()


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _manifest(command: str, args: argparse.Namespace, inputs: dict) -> list[str]:
    skip = {"func", "command"}
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}
    lines = [
        f"jddtest {command}",
        f"version: {__version__}",
        "args: " + " ".join(f"{k}={_fmt(v)}" for k, v in flags.items()),
    ]
    for name, path in inputs.items():
        lines.append(f"input-sha256: {name}={_sha256(path)}")
    lines.append(f"timestamp: {_timestamp()}")
    return lines


def _emit_csv(args, command: str, inputs: dict, header: list[str], rows: list[list]) -> None:
    lines = [f"# {line}" for line in _manifest(command, args, inputs)]
    lines.append(",".join(header))
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_axis(text: str, cast, name: str) -> list:
    """Parse ``start:stop:step`` (inclusive) or a comma list or a single value."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError("ranges take exactly start:stop:step")
            start, stop, step = (cast(p) for p in parts)
            if step <= 0 or stop < start:
                raise ValueError("need step > 0 and stop >= start")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [cast(start + k * step) for k in range(count)]
        return [cast(p) for p in text.split(",") if p.strip() != ""]
    except ValueError as exc:
        raise InputError(f"bad {name} specification {text!r}: {exc}") from exc


def _kernels_for(args, p: PairedSample, q: PairedSample | None) -> tuple[KernelSpec, KernelSpec]:
    if args.kernel == "rbf":
        return RbfKernel(args.sigma_x), RbfKernel(args.sigma_y)
    samples = [p] if q is None else [p, q]
    if args.k_bound is not None:
        k = args.k_bound
    else:
        # default the declared bound to the largest observed self-similarity
        k = max(
            max(float(np.einsum("ij,ij->i", s.xs, s.xs).max()) for s in samples),
            max(float(np.einsum("ij,ij->i", s.ys, s.ys).max()) for s in samples),
        )
    return (
        ExplicitLinearKernel(feature_dim=p.dx, bound=k),
        ExplicitLinearKernel(feature_dim=p.dy, bound=k),
    )


# ---------------------------------------------------------------- test


def cmd_test(args) -> int:
    p = read_sample_csv(args.p)
    q = read_sample_csv(args.q)
    kx, ky = _kernels_for(args, p, q)
    report = run_test(kx, ky, p, q, args.alpha)
    marginals = None
    if args.marginals:
        # marginal-only baselines: blind to shifts that live purely in the
        # x/y coupling, which is exactly what the joint statistic adds
        marginals = {
            "mmd_x": mmd_biased(kx, p.xs, q.xs),
            "mmd_y": mmd_biased(ky, p.ys, q.ys),
        }
    if args.json:
        document = {
            "command": "test",
            "version": __version__,
            "timestamp": _timestamp(),
            "inputs": {"p": _sha256(args.p), "q": _sha256(args.q)},
            "report": report.to_dict(),
        }
        if marginals is not None:
            document["marginals"] = marginals
        sys.stdout.write(json.dumps(document, indent=2, sort_keys=True) + "\n")
    else:
        decision = "REJECT (joint distributions differ)" if report.reject \
            else "ACCEPT (no evidence of joint-distribution shift)"
        lines = [
            "joint two-sample test",
            f"  samples        : p={args.p} (m={p.m}), q={args.q} (n={q.m})",
            f"  kernels        : x={report.kernel_x!r}, y={report.kernel_y!r}",
            f"  kernel bound K : {_fmt(report.config.kernel_bound)}",
            f"  alpha          : {_fmt(report.config.alpha)}",
            f"  JDD            : {_fmt(report.jdd.value)}",
            f"  critical value : {_fmt(report.critical_value)}",
            f"  decision       : {decision}",
        ]
        if marginals is not None:
            lines.append(f"  marginal MMD x : {_fmt(marginals['mmd_x'])}")
            lines.append(f"  marginal MMD y : {_fmt(marginals['mmd_y'])}")
        if report.jdd.clamped:
            lines.append(
                f"  note           : radicand {_fmt(report.jdd.squared_sum)} clamped to 0"
                + (" (beyond rounding tolerance!)" if report.jdd.clamp_suspect else "")
            )
        sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_REJECT if report.reject else EXIT_OK


# ---------------------------------------------------------------- threshold


def cmd_threshold(args) -> int:
    alphas = _parse_axis(args.alphas, float, "--alphas")
    ms = _parse_axis(args.ms, int, "--ms")
    rows = threshold_grid(alphas, ms, args.k)
    _emit_csv(args, "threshold", {}, ["alpha", "m", "critical_value"], [list(r) for r in rows])
    if args.plot:
        from .figures import save_threshold_figure

        save_threshold_figure(alphas, ms, [r[2] for r in rows], args.plot)
    return EXIT_OK


# ---------------------------------------------------------------- mnist-sweep


def _sweep_rhos(args) -> list[float]:
    if args.rho_step <= 0 or args.rho_max < args.rho_min:
        raise InputError("need --rho-step > 0 and --rho-max >= --rho-min")
    count = int(math.floor((args.rho_max - args.rho_min) / args.rho_step + 1e-9)) + 1
    return [args.rho_min + k * args.rho_step for k in range(count)]


def cmd_mnist_sweep(args) -> int:
    if args.trials is not None and args.trials < 1:
        raise InputError(f"--trials must be a positive integer, got {args.trials}")
    image_set = load_idx(args.images, args.labels)
    rhos = _sweep_rhos(args)
    trials = args.trials if args.trials else 1
    normalize = not args.no_normalize
    cfg = TestConfig(alpha=args.alpha, kernel_bound=1.0, m=args.m)
    threshold = critical_value(cfg)
    kx, ky = RbfKernel(args.sigma_x), RbfKernel(args.sigma_y)

    rows = []
    plot_data = []
    for r_index, rho in enumerate(rhos):
        values = []
        for trial in range(trials):
            reference = sample_class(
                image_set, args.digit, args.m, 0.0, args.seed,
                normalize, stream=pack_stream(r_index, trial, 0),
            )
            shifted = sample_class(
                image_set, args.digit, args.m, rho, args.seed,
                normalize, stream=pack_stream(r_index, trial, 1),
            )
            values.append(jdd_biased(kx, ky, reference, shifted).value)
        first = values[0]
        row = [rho, first, threshold, rejects(first, threshold)]
        if args.trials:
            row.extend([math.fsum(values) / trials, min(values), max(values)])
        rows.append(row)
        plot_data.append(values)

    header = ["rho", "jdd", "critical_value", "reject"]
    if args.trials:
        header.extend(["jdd_mean", "jdd_min", "jdd_max"])
    _emit_csv(args, "mnist-sweep", {"images": args.images, "labels": args.labels}, header, rows)
    if args.plot:
        from .figures import save_sweep_figure

        kwargs = {}
        if args.trials:
            kwargs = {
                "means": [r[4] for r in rows],
                "lows": [r[5] for r in rows],
                "highs": [r[6] for r in rows],
            }
        save_sweep_figure(rhos, [r[1] for r in rows], threshold, args.plot, **kwargs)
    return EXIT_OK


# ---------------------------------------------------------------- calibrate


def cmd_calibrate(args) -> int:
    kx, ky = RbfKernel(args.sigma_x), RbfKernel(args.sigma_y)
    inputs = {}
    if args.generator == "gaussian":
        sampler = gaussian_null_sampler(args.m, args.dx, args.dy, args.seed)
    else:
        if not (args.images and args.labels):
            raise InputError("--generator mnist requires --images and --labels")
        image_set = load_idx(args.images, args.labels)
        inputs = {"images": args.images, "labels": args.labels}
        normalize = not args.no_normalize

        def sampler(trial: int):
            p = sample_class(image_set, args.digit, args.m, args.rho, args.seed,
                             normalize, stream=pack_stream(trial, 0, 0))
            q = sample_class(image_set, args.digit, args.m, args.rho, args.seed,
                             normalize, stream=pack_stream(trial, 1, 0))
            return p, q

    result = calibrate_null(kx, ky, sampler, args.alpha, args.trials)
    rows = [
        ["trial", t, rep.jdd.value, rep.critical_value, rep.reject, ""]
        for t, rep in enumerate(result.reports)
    ]
    rows.append(["summary", "", "", "", "", result.rejection_rate])
    header = ["kind", "trial", "jdd", "critical_value", "reject", "rejection_rate"]
    _emit_csv(args, "calibrate", inputs, header, rows)
    if args.plot:
        from .figures import save_calibration_figure

        save_calibration_figure(
            [rep.jdd.value for rep in result.reports],
            result.reports[0].critical_value,
            result.rejection_rate,
            args.plot,
        )
    return EXIT_OK


# ---------------------------------------------------------------- rademacher


def cmd_rademacher(args) -> int:
    sample = read_sample_csv(args.p)
    kx, ky = RbfKernel(args.sigma_x), RbfKernel(args.sigma_y)
    bound = max(kx.bound, ky.bound)
    estimate = rademacher_mc_estimate(kx, ky, sample, args.trials, args.seed)
    jensen = rademacher_jensen_bound(kx, ky, sample)
    k_over_sqrt_m = bound / math.sqrt(sample.m)
    header = ["m", "mc_mean", "mc_std_error", "jensen_bound", "k_over_sqrt_m"]
    rows = [[sample.m, estimate.mean, estimate.std_error, jensen, k_over_sqrt_m]]
    _emit_csv(args, "rademacher", {"p": args.p}, header, rows)
    if args.plot:
        from .figures import save_rademacher_figure

        save_rademacher_figure(
            sample.m, estimate.mean, estimate.std_error, jensen, k_over_sqrt_m, args.plot
        )
    chain_tol = 1e-12
    if estimate.mean > jensen + 3 * estimate.std_error + chain_tol:
        print(
            f"bound violation: MC mean {estimate.mean} exceeds Jensen bound {jensen} "
            f"+ 3 s.e. {3 * estimate.std_error}",
            file=sys.stderr,
        )
        return EXIT_BOUND_VIOLATION
    if jensen > k_over_sqrt_m + chain_tol:
        print(
            f"bound violation: Jensen bound {jensen} exceeds K/sqrt(m) {k_over_sqrt_m}",
            file=sys.stderr,
        )
        return EXIT_BOUND_VIOLATION
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_output_flags(sub) -> None:
    sub.add_argument("--out", help="write the CSV here instead of stdout")
    sub.add_argument("--plot", help="also render the matching figure (PNG) to this path")


def _add_sigma_flags(sub) -> None:
    sub.add_argument("--sigma-x", type=float, default=DEFAULT_SIGMA,
                     help="RBF bandwidth for the x kernel (default 0.25)")
    sub.add_argument("--sigma-y", type=float, default=DEFAULT_SIGMA,
                     help="RBF bandwidth for the y kernel (default 0.25)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jddtest",
        description="Kernel two-sample testing for joint distributions.",
    )
    parser.add_argument("--version", action="version", version=f"jddtest {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    t = subs.add_parser("test", help="test two sample CSVs for joint-distribution shift")
    t.add_argument("--p", required=True, help="first sample CSV")
    t.add_argument("--q", required=True, help="second sample CSV")
    t.add_argument("--alpha", type=float, default=0.05)
    _add_sigma_flags(t)
    t.add_argument("--kernel", choices=["rbf", "linear"], default="rbf")
    t.add_argument("--k-bound", type=float, default=None,
                   help="declared bound for the linear kernel (default: max observed self-similarity)")
    t.add_argument("--marginals", action="store_true",
                   help="also report marginal-only MMD baselines for x and y")
    t.add_argument("--json", action="store_true", help="emit a machine-readable report")
    t.set_defaults(func=cmd_test)

    th = subs.add_parser("threshold", help="tabulate critical values over (alpha, m)")
    th.add_argument("--alphas", required=True, help="comma list or start:stop:step range")
    th.add_argument("--ms", required=True, help="comma list or start:stop:step range")
    th.add_argument("--k", type=float, default=1.0, help="kernel bound K (default 1)")
    _add_output_flags(th)
    th.set_defaults(func=cmd_threshold)

    sw = subs.add_parser("mnist-sweep", help="JDD against rotation angle on one digit class")
    sw.add_argument("--images", required=True, help="IDX image file")
    sw.add_argument("--labels", required=True, help="IDX label file")
    sw.add_argument("--digit", type=int, default=3)
    sw.add_argument("--m", type=int, default=1000)
    sw.add_argument("--alpha", type=float, default=0.05)
    sw.add_argument("--rho-min", type=float, default=-45.0)
    sw.add_argument("--rho-max", type=float, default=45.0)
    sw.add_argument("--rho-step", type=float, default=5.0)
    sw.add_argument("--seed", type=int, required=True)
    sw.add_argument("--trials", type=int, default=None,
                    help="repeat each angle this many times and add mean/min/max columns")
    _add_sigma_flags(sw)
    sw.add_argument("--no-normalize", action="store_true",
                    help="skip per-projection normalization (pixels are scaled to [0,1] instead)")
    _add_output_flags(sw)
    sw.set_defaults(func=cmd_mnist_sweep)

    ca = subs.add_parser("calibrate", help="empirical null rejection rate")
    ca.add_argument("--generator", choices=["gaussian", "mnist"], required=True)
    ca.add_argument("--m", type=int, required=True)
    ca.add_argument("--alpha", type=float, default=0.05)
    ca.add_argument("--trials", type=int, required=True)
    ca.add_argument("--seed", type=int, required=True)
    ca.add_argument("--dx", type=int, default=2, help="x dimension (gaussian generator)")
    ca.add_argument("--dy", type=int, default=2, help="y dimension (gaussian generator)")
    ca.add_argument("--images", help="IDX image file (mnist generator)")
    ca.add_argument("--labels", help="IDX label file (mnist generator)")
    ca.add_argument("--digit", type=int, default=3, help="digit class (mnist generator)")
    ca.add_argument("--rho", type=float, default=0.0,
                    help="rotation applied to BOTH samples (mnist generator; null still holds)")
    ca.add_argument("--no-normalize", action="store_true")
    _add_sigma_flags(ca)
    _add_output_flags(ca)
    ca.set_defaults(func=cmd_calibrate)

    ra = subs.add_parser("rademacher", help="Monte Carlo signed-supremum ordering chain")
    ra.add_argument("--p", required=True, help="sample CSV")
    ra.add_argument("--trials", type=int, default=1000)
    ra.add_argument("--seed", type=int, required=True)
    _add_sigma_flags(ra)
    _add_output_flags(ra)
    ra.set_defaults(func=cmd_rademacher)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BoundViolationError as exc:
        print(f"bound violation: {exc}", file=sys.stderr)
        return EXIT_BOUND_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
