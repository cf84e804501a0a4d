"""Command line: ``aifgtm {gen-data,train,attack,report}``.

Failures exit nonzero after printing one line ``aifgtm-error: <Kind>: <message>``.
"""

import argparse
import os
import sys

from . import data, experiment, metrics, model

# flag -> ExperimentConfig field
ATTACK_FLAGS = {
    "eps": float, "iters": int, "lambda": float, "mu": float, "mu1": float, "mu2": float,
    "beta1": float, "beta2": float, "kernel": int, "sigma": float, "dim_p": float,
    "schedule": str, "seed": int, "out": str, "workers": int, "max_images": int,
    "data_dir": str, "epochs": int,
}


def _gen_data(args):
    ds = data.generate_synthetic_dataset(args.classes, args.per_class, args.side, seed=args.seed,
                                         noise=args.noise, amplitude=args.amplitude)
    data.write_dataset_dir(ds, args.out)
    print(f"wrote {len(ds)} images to {args.out}")


def _train(args):
    ds = data.load_dataset_dir(args.data)
    m = model.build_model(args.kind, ds.image_shape, ds.num_classes, hidden=args.hidden, seed=args.seed)
    m, acc = model.train(m, ds, epochs=args.epochs, lr=args.lr, seed=args.seed, momentum=args.momentum)
    if acc < args.min_accuracy:
        raise experiment.ExperimentError(f"held-out accuracy {acc:.3f} < {args.min_accuracy}")
    model.save_model(m, args.out, seed=args.seed, accuracy=acc)
    print(f"{args.kind} model: held-out accuracy {acc:.4f}, saved to {args.out}")


def _attack(args):
    cfg = experiment.load_config(args.config) if args.config else experiment.ExperimentConfig()
    overrides = {}
    for flag in ATTACK_FLAGS:
        value = getattr(args, flag)
        if value is not None:
            overrides["lam" if flag == "lambda" else flag] = value
    if args.attack:
        overrides["attacks"] = args.attack
    if args.whitebox_ckpt:
        overrides["whitebox_checkpoints"] = args.whitebox_ckpt
        if args.config is None:
            overrides["whitebox"] = []
    cfg = experiment.config_from_mapping(overrides, base=cfg)
    reports = experiment.run_experiment(cfg)
    for rep in reports:
        rates = " ".join(f"{k}={v:.3f}" for k, v in rep.success.items())
        print(f"{rep.attack}: {rates} p_m={rep.p_m:.3f} psnr={metrics.format_value(rep.psnr_db)} "
              f"ssim={rep.ssim:.4f}")
    print(f"report written to {os.path.join(cfg.out, 'report.csv')}")


def _report(args):
    reports = []
    for run in args.runs:
        path = run if run.endswith(".csv") else os.path.join(run, "report.csv")
        with open(path, newline="") as f:
            rows = metrics.read_report_csv(f)
        reports.extend(metrics.reports_from_rows(rows))
    table = metrics.compare_attacks(reports)
    text = table.to_csv()
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def build_parser():
    p = argparse.ArgumentParser(prog="aifgtm", description="Fast-gradient adversarial attacks")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="render a synthetic blob dataset to PPM files")
    g.add_argument("--out", required=True)
    g.add_argument("--classes", type=int, default=10)
    g.add_argument("--per-class", type=int, default=60)
    g.add_argument("--side", type=int, default=32)
    g.add_argument("--noise", type=float, default=16.0)
    g.add_argument("--amplitude", type=float, default=40.0)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=_gen_data)

    t = sub.add_parser("train", help="train a victim model on a dataset directory")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--kind", choices=("linear", "mlp"), default="mlp")
    t.add_argument("--hidden", type=int, default=64)
    t.add_argument("--epochs", type=int, default=300)
    t.add_argument("--lr", type=float, default=0.05)
    t.add_argument("--momentum", type=float, default=0.0)
    t.add_argument("--min-accuracy", type=float, default=0.95)
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=_train)

    a = sub.add_parser("attack", help="run attacks and write reports")
    a.add_argument("--config", help="INI-style experiment config")
    a.add_argument("--attack", action="append", help="attack name, e.g. TI-DI-AITM (repeatable)")
    a.add_argument("--whitebox-ckpt", action="append", help="load a white-box model checkpoint")
    for flag, typ in ATTACK_FLAGS.items():
        a.add_argument("--" + flag.replace("_", "-"), dest=flag, type=typ, default=None)
    a.set_defaults(func=_attack)

    r = sub.add_parser("report", help="merge report.csv files into a comparison table")
    r.add_argument("runs", nargs="+", help="run directories or report CSV files")
    r.add_argument("--out")
    r.set_defaults(func=_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except Exception as e:  # noqa: BLE001 - every failure becomes one parsable line
        print(f"aifgtm-error: {type(e).__name__}: {str(e).splitlines()[0] if str(e) else ''}",
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
