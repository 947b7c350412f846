"""Command-line entry point.

Exit codes: 0 on success, 1 when a solver stage fails, 2 on usage errors.
A short summary goes to standard output; machine-readable output goes to
``--out`` (or to standard output when ``--out`` is not given).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments, lattice, simulate
from .experiments import ExperimentConfig, TrialSpec
from .numtheory import KINDS, Instance, NumberTheoryError, gen_instance
from .postprocess import PostprocessParams, RecoveryError, recover_from_runs
from .simulate import NOISE_MODELS


class UsageError(Exception):
    pass


class StageFailure(Exception):
    pass


KIND_ALIASES = {"synthetic": "synthetic-cyclic", "rsa": "rsa-semiprime", "safe-prime": "safe-prime-group",
                "schnorr": "schnorr-group", "generic": "generic-modulus"}


def _kind(value: str) -> str:
    value = KIND_ALIASES.get(value, value)
    if value not in KINDS:
        raise argparse.ArgumentTypeError(f"unknown kind {value!r}")
    return value


def _float_list(value: str) -> list[float]:
    return [float(x) for x in value.split(",") if x]


def _int_list(value: str) -> list[int]:
    return [int(x) for x in value.split(",") if x]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=("json", "jsonl", "csv"), default="json")
    p.add_argument("--reveal-provenance", action="store_true",
                   help="also write the good/bad label of every run to a sidecar file")
    p.add_argument("--workers", type=int, default=1)


def _trial_flags(p: argparse.ArgumentParser, kind: str, bits: int, d: int, C: float) -> None:
    p.add_argument("--kind", type=_kind, default=kind)
    p.add_argument("--bits", type=int, default=bits)
    p.add_argument("--d", type=int, default=d)
    p.add_argument("--C", type=float, default=C)
    p.add_argument("--m", type=int, help="number of runs (default d + 4)")
    p.add_argument("--m2", type=int, default=0, help="number of bad runs")
    p.add_argument("--noise", choices=NOISE_MODELS, default="uniform-ball")
    p.add_argument("--trial", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("instance", help="generate a problem instance")
    _common(p)
    p.add_argument("--kind", type=_kind, default="synthetic-cyclic")
    p.add_argument("--bits", type=int, default=64)
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--k", type=int, default=0, help="number of arbitrary elements (the last is the base g)")

    p = sub.add_parser("simulate", help="simulate a batch of runs for a task")
    _common(p)
    _trial_flags(p, "synthetic-cyclic", 64, 8, 4.0)
    p.add_argument("--task", choices=experiments.TASKS, default="dlog")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--instance", type=Path, help="write the generated instance here")

    p = sub.add_parser("post", help="recover relations from a run file")
    _common(p)
    p.add_argument("--in", dest="inp", type=Path, required=True)
    p.add_argument("--instance", type=Path, required=True)
    p.add_argument("--task", choices=experiments.TASKS, default="dlog")
    p.add_argument("--k", type=int, default=1)

    for name, task, kind, bits, d, C in (("factor", "factor", "rsa-semiprime", 28, 6, 3.0),
                                         ("dlog", "dlog", "synthetic-cyclic", 64, 8, 4.0),
                                         ("order", "order", "safe-prime-group", 20, 5, 3.0),
                                         ("phi", "phi", "safe-prime-group", 20, 5, 3.0)):
        p = sub.add_parser(name, help=f"run the {task} pipeline once")
        _common(p)
        _trial_flags(p, kind, bits, d, C)
        if name == "dlog":
            p.add_argument("--k", type=int, default=1, help="number of targets")
            p.add_argument("--method", choices=("integrated", "precomputed"), default="integrated")
        if name == "factor":
            p.add_argument("--route", choices=("lattice", "via-order", "via-phi"), default="lattice")

    p = sub.add_parser("robust", help="Monte-Carlo sweep over C, m and bad-run count")
    _common(p)
    p.add_argument("--config", type=Path, help="JSON experiment config (overrides the flags below)")
    p.add_argument("--kind", type=_kind, default="synthetic-cyclic")
    p.add_argument("--bits", type=int, default=64)
    p.add_argument("--d", type=int, default=6)
    p.add_argument("--task", choices=experiments.TASKS, default="dlog")
    p.add_argument("--C-list", type=_float_list, default=[1.0, 2.0, 3.0, 4.0])
    p.add_argument("--m-list", type=_int_list)
    p.add_argument("--m2-list", type=_int_list, default=[0])
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--noise", choices=NOISE_MODELS, default="uniform-ball")
    p.add_argument("--timings", action="store_true", help="include wall-clock columns (not reproducible)")

    p = sub.add_parser("cost", help="leading-order gate and qubit counts")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--C", type=float, required=True)
    p.add_argument("--G", type=float, default=0.0)
    p.add_argument("--S", type=int, default=0)

    p = sub.add_parser("demo-bad-gen", help="generators g^1..g^d versus random ones")
    _common(p)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--C", type=float, default=2.5)
    p.add_argument("--trials", type=int, default=10)

    p = sub.add_parser("lattice", help="exact lattice operations on a JSON matrix")
    _common(p)
    p.add_argument("op", choices=("lll", "hnf", "det", "short"))
    p.add_argument("--in", dest="inp", type=Path, required=True)
    p.add_argument("--T", type=float, default=1.0)
    return parser


# ---------------------------------------------------------------------------

def _emit(args, payload, summary: str) -> None:
    if args.format == "csv" and isinstance(payload, str):
        text = payload
    elif args.format == "jsonl" and isinstance(payload, list):
        text = "".join(json.dumps(x, sort_keys=True) + "\n" for x in payload)
    else:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out is not None:
        args.out.write_text(text)
        print(summary)
    else:
        sys.stdout.write(text)


def _spec(args, task: str) -> TrialSpec:
    if args.d < 2 or args.bits < 8:
        raise UsageError("need --d >= 2 and --bits >= 8")
    m = args.m if args.m is not None else args.d + 4
    return TrialSpec(kind=args.kind, bits=args.bits, d=args.d, task=task, C=args.C, m=m, m2=args.m2,
                     k=getattr(args, "k", 1), noise_model=args.noise, seed=args.seed, trial=args.trial)


def _read_json(path: Path):
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    if not text.strip():
        raise UsageError(f"{path} is empty")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def cmd_instance(args) -> dict:
    inst = gen_instance(args.kind, args.bits, args.d, args.seed, k=args.k)
    return inst.to_json()


def cmd_simulate(args):
    spec = _spec(args, args.task)
    inst = experiments.task_instance(spec)
    elements = experiments.task_elements(inst, spec.task, spec.d, spec.k)
    _, params, runs = experiments.simulate_runs(inst, elements, spec)
    if args.instance is not None:
        args.instance.write_text(json.dumps(inst.to_json(), indent=2, sort_keys=True) + "\n")
    if args.reveal_provenance:
        if args.out is None:
            raise UsageError("--reveal-provenance needs --out")
        side = args.out.with_name(args.out.name + ".provenance.jsonl")
        side.write_text("".join(json.dumps({"trial": r.trial, "index": r.index, "provenance": r.provenance},
                                           sort_keys=True) + "\n" for r in runs))
    args.format = "jsonl"
    return [r.to_json() for r in runs]


def cmd_post(args) -> dict:
    try:
        lines = [ln for ln in args.inp.read_text().splitlines() if ln.strip()]
    except OSError as exc:
        raise UsageError(f"cannot read {args.inp}: {exc}") from exc
    if not lines:
        raise UsageError(f"{args.inp} contains no runs")
    try:
        runs = [simulate.RunRecord.from_json(json.loads(ln)) for ln in lines]
    except (ValueError, KeyError) as exc:
        raise UsageError(f"malformed run record: {exc}") from exc
    inst = Instance.from_json(_read_json(args.instance))
    d = len(runs[0].w_num)
    if any(len(r.w_num) != d or r.D != runs[0].D for r in runs):
        raise UsageError("run records disagree on d or D")
    elements = experiments.task_elements(inst, args.task, d, args.k)
    if len(elements) != d:
        raise UsageError(f"task {args.task} with this instance gives {len(elements)} elements, runs have {d}")
    D = runs[0].D
    params = PostprocessParams(d=d, m=len(runs), D=D, S=D)
    try:
        rec = recover_from_runs(runs, inst.group, elements, params)
    except RecoveryError as exc:
        raise StageFailure(f"post-processing: {exc}") from exc
    return rec.report()


def _trial_output(res) -> dict:
    if res.error:
        raise StageFailure(res.error)
    out = dict(res.answer or {})
    out["referee_match"] = res.success
    return out


def cmd_task(args) -> dict:
    task = args.command
    if task == "factor":
        return _trial_output(experiments.factor_by_route(_spec(args, "factor"), args.route))
    if task == "dlog":
        if args.method == "precomputed":
            task = "dlog-pre"
        elif args.k > 1:
            task = "multi-dlog"
    return _trial_output(experiments.solve_trial(_spec(args, task)))


def cmd_robust(args):
    if args.config is not None:
        cfg = ExperimentConfig.from_json(_read_json(args.config))
    else:
        cfg = ExperimentConfig(kind=args.kind, bits=args.bits, d=args.d, task=args.task, C_values=args.C_list,
                               m_values=args.m_list, m2_values=args.m2_list, trials=args.trials,
                               noise_model=args.noise, seed=args.seed)
    report = experiments.run_experiment(cfg, workers=args.workers)
    if args.format == "csv":
        return report.to_csv(timings=args.timings)
    return report.to_json(timings=args.timings)


def cmd_cost(args) -> dict:
    est = simulate.cost_estimate(args.n, args.C, args.G, args.S)
    return {"n": args.n, "C": args.C, "G": args.G, "S": args.S, "gates_order": est.gates_order,
            "qubits": est.qubits, "qubits_exact": est.qubits_exact, "note": est.note}


def cmd_demo(args) -> dict:
    return experiments.bad_generator_demo(args.r, args.d, C=args.C, trials=args.trials, seed=args.seed)


def cmd_lattice(args):
    data = _read_json(args.inp)
    try:
        rows = [[int(x) for x in r] for r in data]
        if args.op == "lll":
            return [[str(x) for x in r] for r in lattice.lll_reduce(lattice.LatticeBasis.from_rows(rows)).rows]
        if args.op == "hnf":
            return [[str(x) for x in r] for r in lattice.hnf(rows).rows]
        if args.op == "det":
            return str(lattice.determinant(rows))
        return [[str(x) for x in r] for r in lattice.short_generating_set(rows, args.T)]
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad matrix: {exc}") from exc


COMMANDS = {"instance": cmd_instance, "simulate": cmd_simulate, "post": cmd_post, "factor": cmd_task,
            "dlog": cmd_task, "order": cmd_task, "phi": cmd_task, "robust": cmd_robust, "cost": cmd_cost,
            "demo-bad-gen": cmd_demo, "lattice": cmd_lattice}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return 2
    try:
        payload = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error ({args.command}): {exc}", file=sys.stderr)
        return 2
    except StageFailure as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return 1
    except (NumberTheoryError, ValueError) as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return 1
    _emit(args, payload, f"{args.command}: wrote {args.out}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
