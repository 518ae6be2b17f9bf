"""Command-line pipeline: simulate, approximate, fit, diagnose, compare.

Every command echoes its effective configuration into the output directory,
so a run can be reproduced from its outputs alone.  Exit codes: 0 success,
1 runtime or data failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time

import numpy as np

from . import data_io, diagnostics, gumbel_mix, model, sampler

_CONFIG_KEYS = {
    "burn_in": int,
    "n_keep": int,
    "thin": int,
    "flip_every": int,
    "flip_sign_prob": float,
    "seed": int,
    "init_mode": str,
    "store_cell_loglik": lambda s: s.lower() in ("1", "true", "yes"),
    "omega_sq": float,
    "kappa_sq": float,
    "vartheta": lambda s: [float(tok) for tok in s.split(",")],
    "threads": int,
}


class UsageError(ValueError):
    pass


def read_run_config(path) -> dict:
    """Parse a flat ``key = value`` run-configuration file; unknown keys fail."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, eq, raw = line.partition("=")
            key = key.strip()
            if not eq:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            if key not in _CONFIG_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown configuration key {key!r}")
            values[key] = _CONFIG_KEYS[key](raw.strip())
    return values


def _build_fit_inputs(args):
    overrides = read_run_config(args.config) if args.config else {}
    hyper_keys = ("omega_sq", "kappa_sq", "vartheta")
    for key in ("burn_in", "n_keep", "thin", "flip_every", "flip_sign_prob", "seed", "init_mode") + hyper_keys:
        flag = getattr(args, key, None)
        if flag is not None:
            overrides[key] = flag
    if args.store_cell_loglik:
        overrides["store_cell_loglik"] = True

    hyper = model.Hyperparams(
        vartheta=np.asarray(overrides.pop("vartheta", (-2.0, 10.0)), dtype=float),
        omega_sq=overrides.pop("omega_sq", 25.0),
        kappa_sq=overrides.pop("kappa_sq", 10.0),
    )
    overrides.pop("threads", None)

    if args.model == "probit":
        mixture = gumbel_mix.single_normal()
    elif args.mixture:
        mixture = gumbel_mix.read_mixture(args.mixture)
    else:
        mixture = gumbel_mix.builtin_table(6)

    scale = dict(burn_in=5_000, n_keep=2_000, thin=5)
    if args.preset == "paper":
        scale = dict(burn_in=500_000, n_keep=20_000, thin=50)
    for key, value in scale.items():
        overrides.setdefault(key, value)
    config = sampler.SamplerConfig(mixture=mixture, response=args.model, **overrides)
    return hyper, config


def cmd_approx_gumbel(args) -> int:
    mode = "table" if args.table else "fit"
    provenance = (f"mode = {mode}", f"k = {args.k}", f"seed = {args.seed}")
    if args.table:
        if args.k not in (6, 10):
            raise UsageError(f"--table supports K in {{6, 10}}, got {args.k}")
        mixture = gumbel_mix.builtin_table(args.k)
        grid = gumbel_mix.gumbel_quadrature_grid()
        kl = gumbel_mix.kl_divergence(mixture, grid)
    else:
        if args.k < 1:
            raise UsageError(f"--fit requires K >= 1, got {args.k}")
        grid = gumbel_mix.gumbel_quadrature_grid()
        results = gumbel_mix.fit_mixture_ladder(args.k, grid=grid, seed=args.seed)
        final = results[-1]
        if not final.converged:
            print(f"error: optimizer did not converge for K={args.k}: {final.message}", file=sys.stderr)
            gumbel_mix.write_mixture(final.mixture, args.out, provenance=provenance)
            return 1
        mixture, kl = final.mixture, final.kl
    gumbel_mix.write_mixture(mixture, args.out, provenance=provenance)
    print(f"K = {mixture.k}  KL = {kl:.8f}  -> {args.out}")
    return 0


def _write_args_echo(out_dir, pairs) -> None:
    with open(os.path.join(out_dir, "config_echo.txt"), "w", encoding="utf-8") as fh:
        for key, value in pairs:
            fh.write(f"{key} = {value}\n")


def cmd_fit(args) -> int:
    hyper, config = _build_fit_inputs(args)
    try:
        votes = data_io.load_votes(args.votes, legislators_path=args.legislators)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    os.makedirs(args.out, exist_ok=True)
    template = sampler.DrawStore(
        iters=np.zeros(0, dtype=np.int64),
        beta=np.zeros((0, votes.n_legislators)),
        alpha=np.zeros((0, votes.n_items, 2)),
        delta=np.zeros((0, votes.n_items, 2)),
        z=np.zeros((0, votes.n_items), dtype=np.int8),
        loglik=np.zeros(0),
        loglik_by_legislator=np.zeros((0, votes.n_legislators)),
        legislator_ids=[leg.id for leg in votes.legislators],
        item_ids=[item.id for item in votes.items],
        response=config.response,
    )
    if config.store_cell_loglik:
        template.cell_index = np.argwhere(votes.observed)
        template.cell_loglik = np.zeros((0, template.cell_index.shape[0]))
    writer = data_io.DrawCsvWriter(args.out, template, hyper=hyper, config=config)

    progress_path = os.path.join(args.out, "progress.log")
    t_start = time.perf_counter()
    with open(progress_path, "w", encoding="utf-8") as progress_fh:
        progress_fh.write("iteration,total,seconds_per_block,loglik\n")

        def progress(iteration, total, seconds, loglik):
            progress_fh.write(f"{iteration},{total},{seconds:.3f},{loglik!r}\n")
            progress_fh.flush()

        try:
            store = sampler.run_chain(
                votes, hyper, config, writer=writer, progress=progress, progress_every=1000
            )
        except KeyboardInterrupt:
            print("error: interrupted; partial draws kept with truncation marker", file=sys.stderr)
            return 1
    print(
        f"fit: {votes.n_legislators} x {votes.n_items} matrix, {store.n_draws} draws "
        f"({config.response}, K={config.mixture.k}) in {time.perf_counter() - t_start:.1f}s -> {args.out}"
    )
    return 0


def _parallel_map(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def cmd_diagnostics(args) -> int:
    try:
        store = data_io.read_draws(args.draws)
        votes = data_io.load_votes(args.votes, legislators_path=args.legislators)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if store.legislator_ids != [leg.id for leg in votes.legislators]:
        print("error: draws and votes cover different legislator sets", file=sys.stderr)
        return 1
    if store.n_draws == 0:
        print("error: draw store is empty", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)

    report = diagnostics.waic(store.loglik_by_legislator)
    with open(os.path.join(args.out, "waic.csv"), "w", encoding="utf-8", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["legislator_id", "waic"])
        out.writerow(["ALL", repr(report.waic)])
        for lid, value in zip(store.legislator_ids, report.per_unit):
            out.writerow([lid, repr(float(value))])

    rank_summary = diagnostics.ranks(store.beta)
    with open(os.path.join(args.out, "ranks.csv"), "w", encoding="utf-8", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["legislator_id", "mean_rank"])
        for lid, value in zip(store.legislator_ids, rank_summary.mean_rank):
            out.writerow([lid, repr(float(value))])

    degenerate = 0
    with open(os.path.join(args.out, "ess.csv"), "w", encoding="utf-8", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["legislator_id", "ess", "status"])
        for i, lid in enumerate(store.legislator_ids):
            try:
                value = diagnostics.ess(rank_summary.per_draw[:, i].astype(float))
                out.writerow([lid, repr(value), "ok"])
            except (diagnostics.DegenerateSeriesError, ValueError):
                degenerate += 1
                out.writerow([lid, "", "degenerate"])
    if degenerate:
        print(f"warning: {degenerate} rank series degenerate (constant or too short)", file=sys.stderr)

    with open(os.path.join(args.out, "loglik_trace.csv"), "w", encoding="utf-8", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["iter", "total"])
        for it, value in zip(store.iters, store.loglik):
            out.writerow([int(it), repr(float(value))])

    item_ids = [tok for tok in (args.items.split(",") if args.items else []) if tok]
    grid = np.linspace(args.beta_min, args.beta_max, args.beta_points)

    def one_curve(item_id):
        mean, lower, upper = diagnostics.response_curve(store, item_id, grid)
        path = os.path.join(args.out, f"curve_{item_id}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["beta", "mean", "lower", "upper"])
            for row in zip(grid, mean, lower, upper):
                out.writerow([repr(float(v)) for v in row])
        return path

    try:
        _parallel_map(one_curve, item_ids, args.threads)
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _write_args_echo(
        args.out,
        [
            ("command", "diagnostics"),
            ("draws", args.draws),
            ("votes", args.votes),
            ("items", ",".join(item_ids)),
            ("beta_min", repr(args.beta_min)),
            ("beta_max", repr(args.beta_max)),
            ("beta_points", args.beta_points),
            ("threads", args.threads),
        ],
    )
    print(f"diagnostics -> {args.out} (waic {report.waic:.3f}, {len(item_ids)} curves)")
    return 0


def cmd_compare(args) -> int:
    try:
        draws_a = data_io.read_draws(args.draws_a)
        draws_b = data_io.read_draws(args.draws_b)
        votes = data_io.load_votes(args.votes, legislators_path=args.legislators)
        report = diagnostics.compare_models(draws_a, draws_b, votes)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "comparison.csv"), "w", encoding="utf-8", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["metric", "value"])
        for name, value in [
            ("waic_a", report.waic_a.waic),
            ("waic_b", report.waic_b.waic),
            ("waic_diff", report.waic_diff),
            ("spearman_point", report.rho_point),
            ("spearman_mean", report.rho_mean),
            ("spearman_lower90", report.rho_lower),
            ("spearman_upper90", report.rho_upper),
        ]:
            out.writerow([name, repr(float(value))])
    with open(os.path.join(args.out, "spearman.csv"), "w", encoding="utf-8", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["statistic", "value"])
        out.writerow(["mean", repr(report.rho_mean)])
        out.writerow(["lower90", repr(report.rho_lower)])
        out.writerow(["upper90", repr(report.rho_upper)])
    summary = (
        f"WAIC(a) - WAIC(b) = {report.waic_diff:.3f}\n"
        f"rho (posterior mean, 90% interval) = {report.rho_mean:.3f} "
        f"({report.rho_lower:.3f}, {report.rho_upper:.3f})\n"
    )
    with open(os.path.join(args.out, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(summary)
    _write_args_echo(
        args.out,
        [
            ("command", "compare"),
            ("draws_a", args.draws_a),
            ("draws_b", args.draws_b),
            ("votes", args.votes),
        ],
    )
    print(summary, end="")
    return 0


def cmd_simulate(args) -> int:
    if args.i < 2 or args.j < 2:
        raise UsageError("need --i >= 2 and --j >= 2")
    hyper = model.Hyperparams()
    try:
        votes, truth = data_io.simulate_votes(args.i, args.j, hyper, seed=args.seed, mask_rate=args.mask_rate)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    votes_path = os.path.join(args.out, "votes.csv")
    data_io.write_votes_csv(votes, votes_path, legislators_path=os.path.join(args.out, "legislators.csv"))
    with open(os.path.join(args.out, "truth_beta.csv"), "w", encoding="utf-8", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["legislator_id", "beta"])
        for leg, b in zip(votes.legislators, truth.beta):
            out.writerow([leg.id, repr(float(b))])
    with open(os.path.join(args.out, "truth_items.csv"), "w", encoding="utf-8", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["item_id", "z", "alpha1", "alpha2", "delta1", "delta2"])
        for item, z, a, d in zip(votes.items, truth.z, truth.alpha, truth.delta):
            out.writerow([item.id, int(z), repr(float(a[0])), repr(float(a[1])), repr(float(d[0])), repr(float(d[1]))])
    with open(os.path.join(args.out, "config_echo.txt"), "w", encoding="utf-8") as fh:
        fh.write(
            f"i = {args.i}\nj = {args.j}\nseed = {args.seed}\nmask_rate = {args.mask_rate!r}\n"
            f"kept_legislators = {votes.n_legislators}\nkept_items = {votes.n_items}\n"
        )
    print(f"simulated {votes.n_legislators} x {votes.n_items} matrix -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unfolding", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("approx-gumbel", help="fit or emit the Gaussian-mixture shock model")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--fit", action="store_true", help="fit by KL minimization (default)")
    mode.add_argument("--table", action="store_true", help="emit the bundled table (K=6 or 10)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_approx_gumbel)

    p = sub.add_parser("fit", help="run the Gibbs sampler on a vote file")
    p.add_argument("--votes", required=True)
    p.add_argument("--legislators", default=None)
    p.add_argument("--model", choices=("logit", "probit"), default="logit")
    p.add_argument("--mixture", default=None, help="mixture file overriding the K=6 default")
    p.add_argument("--config", default=None, help="key = value run-configuration file")
    p.add_argument("--out", required=True)
    p.add_argument("--preset", choices=("desk", "paper"), default="desk")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--burn-in", dest="burn_in", type=int, default=None)
    p.add_argument("--n-keep", dest="n_keep", type=int, default=None)
    p.add_argument("--thin", type=int, default=None)
    p.add_argument("--flip-every", dest="flip_every", type=int, default=None)
    p.add_argument("--flip-sign-prob", dest="flip_sign_prob", type=float, default=None)
    p.add_argument("--init-mode", dest="init_mode", choices=("random", "party-signed"), default=None)
    p.add_argument("--store-cell-loglik", dest="store_cell_loglik", action="store_true")
    p.add_argument("--omega-sq", dest="omega_sq", type=float, default=None)
    p.add_argument("--kappa-sq", dest="kappa_sq", type=float, default=None)
    p.add_argument(
        "--vartheta", default=None,
        type=lambda s: [float(tok) for tok in s.split(",")],
        help="prior position pair; use the = form for negatives: --vartheta=-2,10",
    )
    p.add_argument("--threads", type=int, default=1, help="worker cap; never changes results")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("diagnostics", help="summaries from a draws directory")
    p.add_argument("--draws", required=True)
    p.add_argument("--votes", required=True)
    p.add_argument("--legislators", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--items", default="", help="comma-separated item ids for response curves")
    p.add_argument("--beta-min", dest="beta_min", type=float, default=-3.0)
    p.add_argument("--beta-max", dest="beta_max", type=float, default=3.0)
    p.add_argument("--beta-points", dest="beta_points", type=int, default=101)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_diagnostics)

    p = sub.add_parser("compare", help="fit-score and rank comparison of two draw sets")
    p.add_argument("--draws-a", dest="draws_a", required=True)
    p.add_argument("--draws-b", dest="draws_b", required=True)
    p.add_argument("--votes", required=True)
    p.add_argument("--legislators", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="draw a synthetic vote file with ground truth")
    p.add_argument("--i", type=int, required=True)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mask-rate", dest="mask_rate", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
