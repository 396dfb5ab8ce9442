"""Command-line interface: ``icfd solve|verify|kernelize|generate|stats``.

Exit codes: 0 Yes/fair, 3 No/unfair, 4 no witness found (randomized search),
1 usage or input error, 2 internal error or exhausted budget.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from icfd import colorcode, kernel, oracle, reductions
from icfd.fairness import EnvyViolation, check
from icfd.model import (
    Allocation,
    FairnessNotion,
    IcfdError,
    Instance,
    ParseError,
    ValidationError,
    compute_stats,
    parse_allocation,
    parse_instance,
    serialize_allocation,
    serialize_instance,
)

EXIT_YES = 0
EXIT_USAGE = 1
EXIT_INTERNAL = 2
EXIT_NO = 3
EXIT_NO_WITNESS = 4

FAMILIES = ("ksum-ef", "ksum-ef1", "ksum-efx", "rbds-prop", "rbds-ef", "rbds-ef1", "rbds-efx", "random")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


@dataclass
class RunReport:
    """Ordered key/value report; timing is kept apart so the rest is reproducible."""

    command: str
    fields: list[tuple[str, object]] = field(default_factory=list)
    timing: dict[str, float] = field(default_factory=dict)

    def add(self, key: str, value: object) -> None:
        self.fields.append((key, value))

    def render(self, as_json: bool, with_timing: bool) -> str:
        if as_json:
            data: dict[str, object] = {"command": self.command}
            data.update(self.fields)
            if with_timing:
                data["timing"] = {k: round(v, 6) for k, v in self.timing.items()}
            return json.dumps(data, sort_keys=False) + "\n"
        lines = [f"command={self.command}"]
        lines.extend(f"{k}={_flat(v)}" for k, v in self.fields)
        if with_timing:
            lines.extend(f"timing.{k}={v:.6f}" for k, v in self.timing.items())
        return "\n".join(lines) + "\n"


def _flat(value: object) -> str:
    if value is None:
        return "-"
    if isinstance(value, (list, tuple)):
        return ",".join(_flat(v) for v in value)
    return str(value)


def _bundles_text(alloc: Allocation) -> str:
    return ";".join(" ".join(map(str, b)) for b in alloc.sorted_bundles())


# --------------------------------------------------------------------------- helpers


def _read_instance(path: str) -> Instance:
    data = sys.stdin.buffer.read() if path == "-" else Path(path).read_bytes()
    return parse_instance(data)


def _require_connected(inst: Instance) -> None:
    if not inst.graph.is_connected():
        raise ValidationError("connected-graph", "the item graph must be connected for this command")


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _mc_config(args) -> colorcode.MonteCarloConfig:
    reps = None if args.repetitions == "auto" else int(args.repetitions)
    return colorcode.MonteCarloConfig(
        seed=args.seed,
        outer_repetitions=reps,
        inner_mode=args.inner,
        inner_failure_budget=Fraction(args.inner_delta),
        allow_large=args.allow_large_repetitions,
    )


# --------------------------------------------------------------------------- commands


def cmd_solve(args, report: RunReport) -> int:
    notion = FairnessNotion.parse(args.notion)
    if args.method == "colorcode" and notion is not FairnessNotion.PROP:
        raise UsageError("--method colorcode supports only --notion prop")
    if args.repetitions != "auto":
        try:
            if int(args.repetitions) < 1:
                raise ValueError
        except ValueError:
            raise UsageError("--repetitions must be a positive integer or 'auto'") from None
    inst = _read_instance(args.input)
    _require_connected(inst)
    report.add("notion", str(notion))
    report.add("method", args.method)
    report.add("kernelize", args.kernelize or args.method == "auto")
    if args.method != "brute":
        report.add("seed", args.seed)
        report.add("repetitions", args.repetitions)
        report.add("inner", args.inner)
    report.add("vc_mode", args.vc_mode)
    report.add("m", inst.m)
    report.add("n", inst.n)
    report.add("p", inst.p)

    start = time.perf_counter()
    outcome = _solve(inst, notion, args, report)
    report.timing["solve"] = time.perf_counter() - start

    report.add("status", str(outcome.status))
    report.add("nodes", outcome.nodes)
    if outcome.witness is not None:
        verdict = check(inst, outcome.witness, notion)
        if not verdict.holds:
            raise RuntimeError("solver produced an allocation that fails the checker")
        report.add("witness", _bundles_text(outcome.witness))
        if args.witness:
            _write(args.witness, serialize_allocation(outcome.witness))
            report.add("witness_path", args.witness)
    return {
        oracle.Status.YES: EXIT_YES,
        oracle.Status.NO: EXIT_NO,
        oracle.Status.NO_WITNESS_FOUND: EXIT_NO_WITNESS,
    }[outcome.status]


def _solve(inst: Instance, notion: FairnessNotion, args, report: RunReport) -> oracle.SolveOutcome:
    if inst.n > inst.p:
        return oracle.SolveOutcome(oracle.Status.NO)
    if args.method == "colorcode":
        return colorcode.solve_prop_cc(inst, _mc_config(args))
    use_kernel = args.kernelize or args.method == "auto"
    if not use_kernel:
        return oracle.solve_exhaustive(inst, notion, args.budget)
    rep = kernel.kernelize(inst, notion, args.vc_mode, args.vc_budget)
    report.add("kernel_size", rep.size)
    report.add("kernel_bound", rep.size_bound)
    if rep.verdict_no:
        return oracle.SolveOutcome(oracle.Status.NO)
    try:
        inner = oracle.solve_exhaustive(rep.kernel, notion, args.budget)
    except oracle.BudgetExceeded:
        if args.method == "auto" and notion is FairnessNotion.PROP:
            report.add("fallback", "colorcode")
            return colorcode.solve_prop_cc(inst, _mc_config(args))
        raise
    if inner.witness is None:
        return oracle.SolveOutcome(inner.status, None, inner.nodes)
    lifted = kernel.lift_witness(rep, inst, inner.witness)
    return oracle.SolveOutcome(oracle.Status.YES, lifted, inner.nodes)


def cmd_verify(args, report: RunReport) -> int:
    notion = FairnessNotion.parse(args.notion)
    inst = _read_instance(args.input)
    alloc = parse_allocation(Path(args.allocation).read_bytes(), inst)
    verdict = check(inst, alloc, notion)
    report.add("notion", str(notion))
    report.add("holds", verdict.holds)
    w = verdict.violation
    if isinstance(w, EnvyViolation):
        report.add("envious", w.envious)
        report.add("envied", w.envied)
        report.add("own_value", w.own_value)
        report.add("other_value", w.other_value)
        if w.removed is not None:
            report.add("removed", w.removed)
            report.add("removed_value", w.removed_value)
    elif w is not None:
        report.add("agent", w.agent)
        report.add("scaled_share", w.scaled_share)
        report.add("total", w.total)
    return EXIT_YES if verdict.holds else EXIT_NO


def cmd_kernelize(args, report: RunReport) -> int:
    notion = FairnessNotion.parse(args.notion)
    inst = _read_instance(args.input)
    _require_connected(inst)
    start = time.perf_counter()
    rep = kernel.kernelize(inst, notion, args.vc_mode, args.vc_budget)
    report.timing["kernelize"] = time.perf_counter() - start
    report.add("notion", str(notion))
    report.add("vc_mode", args.vc_mode)
    report.add("cover_size", len(rep.cover_used.cover))
    report.add("cover_exact", rep.cover_used.exact)
    report.add("size_before", inst.m)
    report.add("size_after", rep.size)
    report.add("bound", rep.size_bound)
    report.add("rr3_no", rep.verdict_no)
    names = [str(v) if v is not None else f"d{i}" for i, v in enumerate(rep.vertex_map)]
    if rep.dummies:
        for agent, d in enumerate(rep.dummies):
            names[d] = f"d{agent + 1}"
    if args.out:
        _write(args.out, serialize_instance(rep.kernel, names))
        report.add("out", args.out)
    log_text = "".join(step.describe() + "\n" for step in rep.rule_log)
    log_path = args.log or (args.out + ".log" if args.out and args.out != "-" else None)
    if log_path:
        _write(log_path, log_text)
        report.add("log", log_path)
    report.add("rules", [step.rule for step in rep.rule_log])
    return EXIT_NO if rep.verdict_no else EXIT_YES


def _ksum_source(args) -> reductions.KSumInstance:
    if args.source:
        return reductions.KSumInstance.parse(Path(args.source).read_text(encoding="utf-8"))
    if args.values is None or args.target is None or args.k is None:
        raise UsageError("k-SUM families need --source or --values/--target/--k")
    values = tuple(int(x) for x in args.values.split(","))
    return reductions.KSumInstance(values, args.target, args.k)


def _rbds_source(args) -> reductions.RbdsInstance:
    if not args.source:
        raise UsageError("RBDS families need --source")
    return reductions.RbdsInstance.parse(Path(args.source).read_text(encoding="utf-8"))


def cmd_generate(args, report: RunReport) -> int:
    family = args.family
    report.add("family", family)
    if family == "random":
        for name in ("m", "n", "p"):
            if getattr(args, name) is None:
                raise UsageError(f"random family needs --{name}")
        inst = reductions.gen_random(args.m, args.n, args.p, args.max_val, args.density, args.seed)
        report.add("seed", args.seed)
        _write(args.out, serialize_instance(inst))
        report.add("m", inst.m)
        report.add("n", inst.n)
        report.add("p", inst.p)
        return EXIT_YES
    kind, target = family.split("-")
    if kind == "ksum":
        src = _ksum_source(args)
        gen = reductions.gen_ksum_ef(src) if target == "ef" else reductions.gen_ksum_envy(src, target)
    else:
        src = _rbds_source(args)
        builders = {
            "prop": reductions.gen_rbds_prop,
            "ef": reductions.gen_rbds_ef,
            "ef1": lambda rb: reductions.gen_rbds_envy(rb, "ef1"),
            "efx": lambda rb: reductions.gen_rbds_envy(rb, "efx"),
        }
        gen = builders[target](src)
    _write(args.out, serialize_instance(gen.instance, gen.vertex_names))
    report.add("notion", str(gen.notion))
    report.add("m", gen.instance.m)
    report.add("n", gen.instance.n)
    report.add("p", gen.instance.p)
    report.add("source_yes", gen.source_yes)
    for note in gen.notes:
        report.add("note", note)
    if args.witness_out:
        if gen.expected_witness is None:
            report.add("witness", None)
        else:
            _write(args.witness_out, serialize_allocation(gen.expected_witness))
            report.add("witness", args.witness_out)
    return EXIT_YES


def cmd_stats(args, report: RunReport) -> int:
    inst = _read_instance(args.input)
    stats = compute_stats(inst, args.vc_mode, args.vc_budget)
    report.add("connected", inst.graph.is_connected())
    for key, value in stats.as_dict().items():
        report.add(key, value)
    return EXIT_YES


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit the report as JSON")
    common.add_argument("--timing", action="store_true", help="include wall-clock timings")
    parser = _Parser(prog="icfd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def vc_flags(p):
        p.add_argument("--vc-mode", choices=("exact-if-small", "approx-only"), default="exact-if-small")
        p.add_argument("--vc-budget", type=int, default=12)

    solve = sub.add_parser("solve", parents=[common], help="decide an instance")
    solve.add_argument("--notion", required=True)
    solve.add_argument("--input", required=True)
    solve.add_argument("--method", choices=("brute", "colorcode", "auto"), default="auto")
    solve.add_argument("--kernelize", action="store_true", help="kernelize before brute force")
    solve.add_argument("--budget", type=int, default=20_000_000, help="search node limit")
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--repetitions", default="auto")
    solve.add_argument("--allow-large-repetitions", action="store_true")
    solve.add_argument("--inner", choices=("exact", "colorcode"), default="exact")
    solve.add_argument("--inner-delta", default="1/100")
    solve.add_argument("--witness", help="write the allocation here (alloc/1)")
    vc_flags(solve)

    verify = sub.add_parser("verify", parents=[common], help="check an allocation")
    verify.add_argument("--notion", required=True)
    verify.add_argument("--input", required=True)
    verify.add_argument("--allocation", required=True)

    kern = sub.add_parser("kernelize", parents=[common], help="reduce an instance")
    kern.add_argument("--notion", required=True)
    kern.add_argument("--input", required=True)
    kern.add_argument("--out")
    kern.add_argument("--log", help="rule log path (default: <out>.log)")
    vc_flags(kern)

    gen = sub.add_parser("generate", parents=[common], help="build a gadget or random instance")
    gen.add_argument("family", choices=FAMILIES)
    gen.add_argument("--source", help="source instance file (k-SUM or RBDS format)")
    gen.add_argument("--values", help="k-SUM values, comma separated")
    gen.add_argument("--target", type=int)
    gen.add_argument("--k", type=int)
    gen.add_argument("--m", type=int)
    gen.add_argument("--n", type=int)
    gen.add_argument("--p", type=int)
    gen.add_argument("--max-val", type=int, default=5)
    gen.add_argument("--density", type=float, default=0.3)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out")
    gen.add_argument("--witness-out")

    stats = sub.add_parser("stats", parents=[common], help="report instance parameters")
    stats.add_argument("--input", required=True)
    vc_flags(stats)
    return parser


COMMANDS = {
    "solve": cmd_solve,
    "verify": cmd_verify,
    "kernelize": cmd_kernelize,
    "generate": cmd_generate,
    "stats": cmd_stats,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    report = RunReport(args.command)
    try:
        code = COMMANDS[args.command](args, report)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (ParseError, ValidationError, reductions.ParameterError, ValueError, OSError) as exc:
        kind = getattr(exc, "invariant", None)
        sys.stderr.write(f"error: {exc}\n" if kind is None else f"error [{kind}]: {exc}\n")
        return EXIT_USAGE
    except (oracle.BudgetExceeded, colorcode.ResourceCapExceeded) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INTERNAL
    except (IcfdError, RuntimeError) as exc:
        sys.stderr.write(f"internal error: {exc}\n")
        return EXIT_INTERNAL
    report.add("exit", code)
    # generate and kernelize may use stdout for artifacts; keep the report on stderr then
    out = getattr(args, "out", None)
    to_stderr = (args.command == "generate" and out in (None, "-")) or (args.command == "kernelize" and out == "-")
    stream = sys.stderr if to_stderr else sys.stdout
    stream.write(report.render(args.json, args.timing))
    return code
