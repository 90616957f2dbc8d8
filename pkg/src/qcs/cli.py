"""Command-line entry point: ``qcs experiment|theory|matrix|reproduce``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error.
"""
import argparse
import csv
import math
import os
import sys
from dataclasses import replace

from . import experiments, sensing, theory
from .errors import ConfigError, InvalidSpecError, NumericalError, QcsError, UnsupportedConfigurationError
from .families import Family
from .quantizer import ArithmeticMode, FoldingSpec
from .reconstruction import Algorithm

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_overrides(p):
    g = p.add_argument_group("overrides")
    g.add_argument("--out", help="CSV output path (a .plot.json is written alongside)")
    g.add_argument("--trials", type=int)
    g.add_argument("--seed", type=lambda s: int(s, 0))
    g.add_argument("--jobs", type=int)
    g.add_argument("--algo", choices=["omp", "iht", "bayes", "bayesian"])
    g.add_argument("--k", type=_int_list, help="sparsity list, e.g. 5,10,15")
    g.add_argument("--bits", type=_int_list, help="register lengths B, e.g. 4,8,12")
    g.add_argument("--mode", choices=[m.value for m in ArithmeticMode])
    g.add_argument("--tau", type=float, help="IHT step size")
    g.add_argument("--iters", type=int, help="IHT iterations")
    g.add_argument("--threshold", type=float, help="Bayesian pruning threshold")
    g.add_argument("--fold-bits", type=int, help="coefficient register length B_z")
    g.add_argument("--fold-sigma", type=float, help="additive coefficient noise sigma_z")
    g.add_argument("--snr-average", choices=["energy", "db"])


def build_parser():
    parser = _Parser(prog="qcs", description="Quantised compressive sensing experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    exp = sub.add_parser("experiment", help="run a configured sweep")
    exp_sub = exp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    run = exp_sub.add_parser("run", help="run the sweep described by a TOML file")
    run.add_argument("--config", required=True)
    _add_overrides(run)

    th = sub.add_parser("theory", help="closed-form predictions")
    th_sub = th.add_subparsers(dest="action", required=True, parser_class=_Parser)
    pr = th_sub.add_parser("predict", help="expected error energy and SNR_th")
    pr.add_argument("--n", type=int, default=256)
    pr.add_argument("--m", type=int, default=128)
    pr.add_argument("--k", type=int, required=True)
    pr.add_argument("--b", type=int, required=True)
    cx = pr.add_mutually_exclusive_group()
    cx.add_argument("--complex", dest="complex_signal", action="store_true", default=True)
    cx.add_argument("--real", dest="complex_signal", action="store_false")
    pr.add_argument("--family", default="partial_dft", choices=[f.value for f in Family])
    pr.add_argument("--energy", type=float, help="||X_K||^2 (default: expected energy of the test signal)")
    pr.add_argument("--jitter", type=float, default=0.4, help="amplitude jitter used for the default energy")
    pr.add_argument("--tail", type=float, default=0.0, help="||X - X_K||^2")
    pr.add_argument("--sigma-z", type=float, default=0.0, help="folding noise standard deviation")
    pr.add_argument("--mode", default="fixed_point", choices=[m.value for m in ArithmeticMode])
    pr.add_argument("--sigma-x", type=float, help="per-component coefficient variance (floating point)")
    pr.add_argument("--no-bernoulli-correction", action="store_true")
    pr.add_argument("--csv", help="append the prediction as a CSV row to this file")

    mx = sub.add_parser("matrix", help="measurement matrix utilities")
    mx_sub = mx.add_subparsers(dest="action", required=True, parser_class=_Parser)
    info = mx_sub.add_parser("info", help="coherence summary")
    info.add_argument("--family", choices=[f.value for f in Family])
    info.add_argument("--m", type=int)
    info.add_argument("--n", type=int)
    info.add_argument("--seed", type=int, default=0)
    info.add_argument("--save", help="write the matrix as CSV")
    info.add_argument("--load", help="read a matrix CSV instead of building one")

    rep = sub.add_parser("reproduce", help="run a built-in example")
    rep.add_argument("example", choices=experiments.EXAMPLE_NAMES)
    _add_overrides(rep)
    return parser


def _apply_overrides(cfg, args):
    changes = {}
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.jobs is not None:
        changes["jobs"] = args.jobs
    if args.algo is not None:
        changes["algorithm"] = Algorithm(args.algo)
    if args.k is not None:
        changes["K_list"] = args.k
    if args.bits is not None:
        changes["B_list"] = args.bits
    if args.mode is not None:
        changes["mode"] = ArithmeticMode(args.mode)
    if args.snr_average is not None:
        changes["snr_average"] = args.snr_average
    algo = dict(cfg.algo)
    for flag, key in (("tau", "iht_tau"), ("iters", "iht_iterations"), ("threshold", "bayes_threshold")):
        if getattr(args, flag) is not None:
            algo[key] = getattr(args, flag)
    if algo != cfg.algo:
        changes["algo"] = algo
    if args.fold_bits is not None or args.fold_sigma is not None:
        fold = cfg.fold or FoldingSpec(quantize_coefficients=args.fold_bits is not None)
        if args.fold_bits is not None:
            fold = replace(fold, quantize_coefficients=True, B_z=args.fold_bits)
        if args.fold_sigma is not None:
            fold = replace(fold, additive_noise_sigma=args.fold_sigma)
        changes["fold"] = fold
    try:
        return replace(cfg, **changes) if changes else cfg
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _fmt_db(v):
    return f"{v:8.2f}" if math.isfinite(v) else f"{v!s:>8}"


def _print_rows(result, out):
    out.write(f"{'family':<12} {'M':>4} {'K':>3} {'B':>3} {'scenario':<10} {'algo':<9}"
              f" {'SNR_st':>8} {'SNR_th':>8} {'gap':>8} {'sat':>5} {'fail':>4} {'miss':>4}\n")
    for r in result.rows:
        out.write(f"{r.family:<12} {r.M:>4} {r.K:>3} {r.B:>3} {r.scenario:<10} {r.algorithm:<9}"
                  f" {_fmt_db(r.snr_st_db)} {_fmt_db(r.snr_th_db)} {_fmt_db(r.gap_db)}"
                  f" {r.saturation_count:>5} {r.failures:>4} {r.support_misses:>4}\n")


def _output_paths(base, configs):
    if base is None:
        return [None] * len(configs)
    if len(configs) == 1:
        return [base]
    root, ext = os.path.splitext(base)
    return [f"{root}_{c.family.value}_{c.scenario.value}{ext or '.csv'}" for c in configs]


def _run_configs(configs, out_base, out):
    failed = 0
    for cfg, path in zip(configs, _output_paths(out_base, configs)):
        cfg = replace(cfg, output_path=path)
        result = experiments.run_experiment(cfg)
        _print_rows(result, out)
        if path:
            out.write(f"wrote {path} and {experiments.plot_path_for(path)}\n")
        for r in result.rows:
            for msg in r.failure_messages:
                sys.stderr.write(f"M={r.M} K={r.K} B={r.B}: {msg}\n")
            failed += r.failures
    return failed


def _cmd_experiment(args, out):
    cfg = _apply_overrides(experiments.load_config(args.config), args)
    return EXIT_NUMERICAL if _run_configs([cfg], args.out or cfg.output_path, out) else EXIT_OK


def _cmd_reproduce(args, out):
    configs = [_apply_overrides(c, args) for c in experiments.example_configs(args.example)]
    if args.example == "example1":
        for cfg in configs:
            r = experiments.run_experiment(cfg, write=False).rows[0]
            out.write(f"{cfg.scenario.value}: SNR_st = {r.snr_st_db:.2f} dB, "
                      f"SNR_th = {r.snr_th_db:.2f} dB over {r.trials} trials\n")
        if args.out is None:
            return EXIT_OK
    return EXIT_NUMERICAL if _run_configs(configs, args.out, out) else EXIT_OK


def _cmd_theory(args, out):
    if args.energy is None:
        energy = theory.expected_signal_energy(args.m, args.k, args.jitter)
    else:
        energy = args.energy
    sigma_x = args.sigma_x
    if sigma_x is None:
        sigma_x = theory.floating_sigma_x_sq(energy, args.k, args.complex_signal)
    spec = theory.ScenarioSpec(
        N=args.n, M=args.m, K=args.k, B=args.b, family=Family(args.family),
        complex_signal=args.complex_signal, tail_energy=args.tail,
        sigma_z_sq=args.sigma_z ** 2, signal_energy_K=energy, mode=ArithmeticMode(args.mode),
        sigma_X_sq=sigma_x, bernoulli_correction=not args.no_bernoulli_correction,
    )
    pred = theory.predict(spec)
    out.write(f"signal_energy_K: {energy:.6g}\n")
    for name, value in pred.components.items():
        out.write(f"{name}: {value:.6e}\n")
    out.write(f"expected_error_energy: {pred.expected_error_energy:.6e}\n")
    out.write(f"dominant_term: {pred.dominant_term}\n")
    out.write(f"snr_th_db: {pred.snr_th_db:.2f}\n")
    for note in pred.notes:
        out.write(f"note: {note}\n")
    if args.csv:
        header = ["N", "M", "K", "B", "family", "mode", "signal_energy_K", "quantization",
                  "nonsparsity", "folding", "expected_error_energy", "snr_th_db", "dominant_term"]
        new = not os.path.exists(args.csv)
        with open(args.csv, "a", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            if new:
                w.writerow(header)
            c = pred.components
            w.writerow([args.n, args.m, args.k, args.b, args.family, args.mode, repr(energy),
                        repr(c["quantization"]), repr(c["nonsparsity"]), repr(c["folding"]),
                        repr(pred.expected_error_energy), repr(pred.snr_th_db), pred.dominant_term])
    return EXIT_OK


def _cmd_matrix(args, out):
    if args.load:
        A = sensing.load_matrix(args.load)
    else:
        if args.family is None or args.m is None or args.n is None:
            raise ConfigError("matrix info needs --family, --m and --n (or --load)")
        A = sensing.build_matrix(args.family, args.m, args.n, args.seed)
    rep = sensing.coherence_report(A)
    out.write(f"family: {A.family.value}\nM: {A.M}\nN: {A.N}\n")
    out.write(f"mu: {rep.mu:.6g}\n")
    out.write(f"welch_bound: {rep.welch_bound:.6g}\n")
    out.write(f"sigma_mu_sq_theoretical: {rep.sigma_mu_sq_theoretical:.6g}\n")
    out.write(f"sigma_mu_sq_empirical: {rep.sigma_mu_sq_empirical:.6g}\n")
    out.write(f"K_max: {rep.K_max_unique}\n")
    if args.save:
        sensing.save_matrix(A, args.save)
        out.write(f"wrote {args.save}\n")
    return EXIT_OK


_COMMANDS = {
    "experiment": _cmd_experiment,
    "theory": _cmd_theory,
    "matrix": _cmd_matrix,
    "reproduce": _cmd_reproduce,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args, out)
    except (ConfigError, InvalidSpecError, UnsupportedConfigurationError) as exc:
        sys.stderr.write(f"qcs: configuration error: {exc}\n")
        return EXIT_CONFIG
    except NumericalError as exc:
        sys.stderr.write(f"qcs: numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except OSError as exc:
        sys.stderr.write(f"qcs: I/O error: {exc}\n")
        return EXIT_IO
    except QcsError as exc:
        sys.stderr.write(f"qcs: error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
