"""Command-line entry point: ``ptrs-lab <command>``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path


from . import harness as hs
from .allocation import aliasing_check
from .phase_noise import load_multi_pole_zero


def _cmd_trial(args) -> int:
    s = hs.load_scenario(args.config)
    rep = hs.run_trial(s, args.seed - s.base_seed, keep_trajectories=bool(args.dump))
    print(f"scheme={rep.scheme_id} seed={rep.seed} eps_rms={rep.eps_rms:.6g} "
          f"mae={rep.mae:.6g} evm_db={rep.evm_db:.3f} papr_db={rep.papr_db_samples[0]:.3f}")
    if args.dump:
        Path(args.dump).write_text(hs.trajectory_csv(rep))
    return 0


def _cmd_sweep(args) -> int:
    grid = hs.load_grid(args.grid or hs.builtin("table1.yaml"))
    if args.trials:
        grid = replace(grid, schemes={k: replace(v, n_trials=args.trials) for k, v in grid.schemes.items()})
    res = hs.run_sweep(grid, workers=args.workers)
    out = Path(args.out)
    hs.write_csv(res.rows, out / "sweep.csv")
    gains = [{"a": a, "nf": nf, **{f"G_{k}": v for k, v in g.items()}} for (a, nf), g in res.gains.items()]
    hs.write_json({"scenarios": {k: hs.scenario_to_dict(v) for k, v in grid.schemes.items()},
                   "reference": grid.reference, "gains": gains}, out / "summary.json")
    for g in gains:
        print(" ".join(f"{k}={v:.4g}" for k, v in g.items()))
    return 0


def _cmd_nr_compare(args) -> int:
    templates, doc = hs.load_comparison(args.config)
    pn = load_multi_pole_zero(args.pn_model) if args.pn_model else next(iter(templates.values())).pn
    carriers = [float(c) for c in (args.carriers or doc["carriers_hz"])]
    snrs = [float(s) for s in (args.snr or doc["snr_db"])]
    rows = hs.run_nr_comparison(templates, pn, carriers, snrs, n_trials=args.trials, workers=args.workers)
    out = Path(args.out)
    hs.write_csv(rows, out / "nr_compare.csv")
    hs.write_json({"scenarios": {k: hs.scenario_to_dict(replace(v, pn=pn)) for k, v in templates.items()},
                   "carriers_hz": carriers, "snr_db": snrs}, out / "nr_compare.json")
    for r in rows:
        print(f"{r['scheme']:>4} fc={r['carrier_hz'] / 1e9:g}GHz snr={r['snr_db']:g} "
              f"evm={r['evm_db_mean']:.2f}+-{r['evm_db_se']:.2f} dB")
    return 0


def _cmd_papr(args) -> int:
    templates, _ = hs.load_comparison(args.config)
    mods = [m.strip().lower() for m in args.mod.split(",")]
    res = hs.run_papr(templates["blk"], mods, args.symbols)
    out = Path(args.out)
    rows = []
    for mod, r in res.items():
        for (th, p0), (_, p1) in zip(r["ccdf_data_only"], r["ccdf_block"]):
            rows.append({"modulation": mod, "threshold_db": th, "ccdf_data_only": p0, "ccdf_block": p1})
        print(f"{mod}: PAPR@1e-2 data-only {r['papr_1e-2_data_only']:.3f} dB, "
              f"block {r['papr_1e-2_block']:.3f} dB, delta {r['delta_db']:.3f} dB")
    hs.write_csv(rows, out / "papr_ccdf.csv", ("modulation", "threshold_db", "ccdf_data_only", "ccdf_block"))
    return 0


def _cmd_alias(args) -> int:
    r = aliasing_check(args.bins, args.pulses, args.T)
    print(f"W={r.window_hz * args.T:g}/T f_s={r.rep_rate_hz * args.T:g}/T aliased={r.aliased}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ptrs-lab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("trial", help="run a single trial of a scenario file")
    t.add_argument("--config", required=True)
    t.add_argument("--seed", type=int, required=True, help="absolute trial seed")
    t.add_argument("--dump", help="write true/estimated phase trajectory CSV here")
    t.set_defaults(func=_cmd_trial)

    s = sub.add_parser("sweep", help="(a, nf) Monte Carlo sweep with gains vs the reference scheme")
    s.add_argument("--grid", help="grid document (default: built-in table1.yaml)")
    s.add_argument("--out", default="results")
    s.add_argument("--trials", type=int)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=_cmd_sweep)

    n = sub.add_parser("nr-compare", help="EVM vs SNR for NR and block PTRS at several carriers")
    n.add_argument("--pn-model", help="multi-pole/zero parameter file (default: shipped approximation)")
    n.add_argument("--config", help="comparison document (default: built-in nr_compare.yaml)")
    n.add_argument("--carriers", type=float, nargs="+")
    n.add_argument("--snr", type=float, nargs="+")
    n.add_argument("--trials", type=int)
    n.add_argument("--workers", type=int, default=1)
    n.add_argument("--out", default="results")
    n.set_defaults(func=_cmd_nr_compare)

    q = sub.add_parser("papr", help="PAPR CCDF of data-only vs block PTRS symbols")
    q.add_argument("--mod", default="qpsk,64qam")
    q.add_argument("--symbols", type=int, default=10000)
    q.add_argument("--config")
    q.add_argument("--out", default="results")
    q.set_defaults(func=_cmd_papr)

    a = sub.add_parser("alias-check", help="window vs repetition-rate aliasing predicate")
    a.add_argument("--bins", type=int, required=True)
    a.add_argument("--pulses", type=int, required=True)
    a.add_argument("--T", type=float, default=1.0, help="symbol duration (s)")
    a.set_defaults(func=_cmd_alias)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError) as e:
        print(f"ptrs-lab: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
