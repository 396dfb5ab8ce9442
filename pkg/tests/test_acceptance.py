"""Acceptance criteria 1-10.

Each criterion is a function returning ``(ok, detail)``. The pytest wrappers
record one ``criterion N: PASS|FAIL`` line per criterion (shown in the terminal
summary) and fail when the criterion fails. Running this file directly prints
the same lines.
"""

from __future__ import annotations

import functools
import itertools
import random
import subprocess
import sys
import time
import warnings
from pathlib import Path

from icfd.colorcode import Coloring, MonteCarloConfig, colorful_dp, solve_prop_cc
from icfd.fairness import check, check_all
from icfd.kernel import envy_size_bound, kernelize, preprocess_prop, prop_size_bound
from icfd.model import FairnessNotion, Instance, agent_types, distinct_values, iter_bits
from icfd.oracle import Status, connected_subsets, enumerate_allocations, solve_exhaustive, solve_ksum_brute, solve_rbds_brute
from icfd.reductions import (
    KSumInstance,
    RbdsInstance,
    gen_ksum_ef,
    gen_ksum_envy,
    gen_rbds_ef,
    gen_rbds_envy,
    gen_rbds_prop,
)
from strategies import random_connected_graph, random_instance, small_cover_instance

EF, EF1, EFX, PROP = FairnessNotion.EF, FairnessNotion.EF1, FairnessNotion.EFX, FairnessNotion.PROP
ENVY = (EF, EF1, EFX)


def _quiet(fn):
    @functools.wraps(fn)
    def inner(*args, **kwargs):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return fn(*args, **kwargs)

    return inner


# --------------------------------------------------------------------------- 1


def criterion_1() -> tuple[bool, str]:
    rng = random.Random(101)
    instances = allocations = chain_fail = identical_fail = identical_checked = 0
    for idx in range(600):
        m = rng.randint(1, 10)
        n = rng.randint(1, 3)
        inst = random_instance(rng, m, n, rng.randint(1, m))
        if idx % 3 == 0 and n >= 2:
            inst = Instance(inst.graph, (inst.valuations[0],) * n, inst.p)
        identical = len(set(inst.valuations)) == 1
        instances += 1
        for alloc in enumerate_allocations(inst):
            allocations += 1
            v = check_all(inst, alloc)
            if v[EF].holds and not v[EFX].holds or v[EFX].holds and not v[EF1].holds:
                chain_fail += 1
            if identical:
                identical_checked += 1
                equal = len({inst.value(0, b) for b in alloc.bundles}) == 1
                identical_fail += v[EF].holds != equal
    ok = instances >= 500 and chain_fail == 0 and identical_fail == 0
    return ok, (
        f"{instances} instances, {allocations} allocations, chain counterexamples {chain_fail}, "
        f"identical-valuation mismatches {identical_fail}/{identical_checked}"
    )


# --------------------------------------------------------------------------- 2-4


@functools.lru_cache(maxsize=None)
def _rr1_runs() -> tuple[int, int, list[tuple[int, int]]]:
    rng = random.Random(202)
    mismatches = 0
    sizes = []
    for _ in range(200):
        m = rng.randint(2, 12)
        t = rng.randint(1, min(3, m - 1))
        n = rng.randint(1, 3)
        values = tuple(rng.sample(range(5), rng.randint(1, 3)))
        inst = small_cover_instance(rng, m, n, rng.randint(1, min(5, m)), t, values)
        for notion in ENVY:
            rep = kernelize(inst, notion)
            t_used = len(rep.cover_used.cover)
            bound = envy_size_bound(inst.p, t_used, distinct_values(inst), len(agent_types(inst)))
            sizes.append((rep.size, bound))
            before = solve_exhaustive(inst, notion).status
            after = solve_exhaustive(rep.kernel, notion).status
            mismatches += before != after
    return 200, mismatches, sizes


@functools.lru_cache(maxsize=None)
def _prop_runs() -> tuple[int, int, int, list[tuple[int, int]]]:
    rng = random.Random(303)
    mismatches = fired = 0
    sizes = []
    for _ in range(100):
        m = rng.randint(1, 6)
        n = rng.randint(1, 2)
        p = rng.randint(1, min(4, m))
        if m == 1:
            inst = random_instance(rng, 1, n, 1)
        else:
            inst = small_cover_instance(rng, m, n, p, rng.randint(1, min(3, m - 1)), (0, 1, 2, 3))
        rep = kernelize(inst, PROP)
        t_used = len(rep.cover_used.cover)
        bound = prop_size_bound(inst.p, t_used, distinct_values(inst), len(agent_types(inst)), inst.n)
        sizes.append((rep.size, bound))
        truth = solve_exhaustive(inst, PROP).status
        augmented = solve_exhaustive(preprocess_prop(inst, rep.cover_used).instance, PROP).status
        if rep.verdict_no:
            fired += 1
            kernel_answer = Status.NO
        else:
            kernel_answer = solve_exhaustive(rep.kernel, PROP).status
        mismatches += not (truth == augmented == kernel_answer)
    return 100, mismatches, fired, sizes


def criterion_2() -> tuple[bool, str]:
    count, mismatches, _ = _rr1_runs()
    return mismatches == 0, f"{count} instances x 3 notions, mismatches {mismatches}"


def criterion_3() -> tuple[bool, str]:
    count, mismatches, fired, _ = _prop_runs()
    return mismatches == 0, f"{count} instances, mismatches {mismatches}, RR3 shortcuts {fired}"


def criterion_4() -> tuple[bool, str]:
    sizes = _rr1_runs()[2] + _prop_runs()[3]
    over = [(s, b) for s, b in sizes if s > b]
    return not over, f"{len(sizes)} kernels, over bound {len(over)}"


# --------------------------------------------------------------------------- 5


def criterion_5() -> tuple[bool, str]:
    rng = random.Random(505)
    mismatches = bad_witness = 0
    for _ in range(300):
        m = rng.randint(1, 10)
        k = rng.randint(1, min(5, m))
        g = random_connected_graph(rng, m, extra=rng.choice((0.0, 0.2, 0.5)))
        w = [rng.randint(0, 20) for _ in range(m)]
        coloring = Coloring(tuple(rng.randrange(k) for _ in range(m)), k)
        table = colorful_dp(g, w, coloring)
        found = table.best_full()
        best = None
        for mask in connected_subsets(g, k, k):
            vs = list(iter_bits(mask))
            if len({coloring.colors[v] for v in vs}) == k:
                s = sum(w[v] for v in vs)
                best = s if best is None else max(best, s)
        mismatches += (None if found is None else found[0]) != best
        if found is not None:
            wit = table.witness(found[1], (1 << k) - 1)
            valid = len(wit) == k and g.is_connected(wit) and sum(w[v] for v in wit) == found[0]
            bad_witness += not valid
    return mismatches == 0 and bad_witness == 0, f"300 tuples, mismatches {mismatches}, bad witnesses {bad_witness}"


# --------------------------------------------------------------------------- 6


def _prop_sample(rng: random.Random, want_yes: bool, count: int) -> list[Instance]:
    out = []
    while len(out) < count:
        n = rng.randint(2, 3)
        p = rng.randint(n, 5)
        m = rng.randint(p, 7)
        inst = random_instance(rng, m, n, p, values=(0, 1, 2, 3, 4, 5))
        if (solve_exhaustive(inst, PROP).status is Status.YES) == want_yes:
            out.append(inst)
    return out


def criterion_6() -> tuple[bool, str]:
    rng = random.Random(606)
    false_yes = 0
    for inst in _prop_sample(rng, False, 20):
        for seed in range(50):
            false_yes += solve_prop_cc(inst, MonteCarloConfig(seed=seed)).status is Status.YES
    rates = []
    for inst in _prop_sample(rng, True, 10):
        hits = 0
        for seed in range(200):
            out = solve_prop_cc(inst, MonteCarloConfig(seed=seed))
            if out.status is Status.YES:
                hits += check(inst, out.witness, PROP).holds
        rates.append(hits / 200)
    ok = false_yes == 0 and min(rates) >= 0.55
    shown = " ".join(f"{r:.3f}" for r in rates)
    return ok, f"false Yes on No-instances {false_yes}/1000, success rates {shown} (min {min(rates):.3f})"


# --------------------------------------------------------------------------- 7


@_quiet
def _ksum_star() -> tuple[int, int]:
    solves = mismatches = 0
    for k in (2, 3):
        for size in range(k, 7):
            for values in itertools.combinations_with_replacement(range(9), size):
                for target in range(9):
                    ks = KSumInstance(values, target, k)
                    truth = solve_ksum_brute(ks) is not None
                    gen = gen_ksum_ef(ks)
                    solves += 1
                    mismatches += (solve_exhaustive(gen.instance, EF).status is Status.YES) != truth
    return solves, mismatches


@_quiet
def _ksum_path() -> tuple[int, int]:
    solves = mismatches = 0
    for size in (4, 5):
        for values in itertools.combinations_with_replacement(range(9), size):
            for target in range(9):
                ks = KSumInstance(values, target, 2)
                truth = solve_ksum_brute(ks) is not None
                for notion in (EF1, EFX):
                    gen = gen_ksum_envy(ks, notion)
                    solves += 1
                    mismatches += (solve_exhaustive(gen.instance, notion).status is Status.YES) != truth
    return solves, mismatches


@_quiet
def _rbds_sweep() -> tuple[int, int]:
    solves = mismatches = 0
    for t_size in range(1, 4):
        for n_size in range(1, 5):
            cells = [(t, n) for t in range(t_size) for n in range(n_size)]
            for bits in range(1 << len(cells)):
                edges = frozenset(c for i, c in enumerate(cells) if bits >> i & 1)
                for k in range(min(2, n_size) + 1):
                    rb = RbdsInstance(t_size, n_size, edges, k)
                    truth = solve_rbds_brute(rb) is not None
                    for gen_fn, notion in ((gen_rbds_prop, PROP), (gen_rbds_ef, EF)):
                        gen = gen_fn(rb)
                        solves += 1
                        mismatches += (solve_exhaustive(gen.instance, notion).status is Status.YES) != truth
    return solves, mismatches


def criterion_7() -> tuple[bool, str]:
    parts = {"k-SUM star (EF)": _ksum_star(), "k-SUM path (EF1/EFX)": _ksum_path(), "RBDS (PROP/EF)": _rbds_sweep()}
    ok = all(bad == 0 for _, bad in parts.values())
    return ok, "; ".join(f"{name}: {solves} solves, mismatches {bad}" for name, (solves, bad) in parts.items())


# --------------------------------------------------------------------------- 8


@_quiet
def criterion_8() -> tuple[bool, str]:
    checked = failed = 0
    for n_size in (2, 3, 4):
        cells = [(t, n) for t in range(2) for n in range(n_size)]
        for bits in range(1 << len(cells)):
            edges = frozenset(c for i, c in enumerate(cells) if bits >> i & 1)
            rb = RbdsInstance(2, n_size, edges, 2)
            if solve_rbds_brute(rb) is None:
                continue
            for notion in (EF1, EFX):
                gen = gen_rbds_envy(rb, notion)
                checked += 1
                failed += gen.expected_witness is None or not check(gen.instance, gen.expected_witness, notion).holds
    return checked > 0 and failed == 0, f"{checked} witnesses (k=2, t=2 Yes sources, EF1 and EFX), failures {failed}"


# --------------------------------------------------------------------------- 9


def criterion_9() -> tuple[bool, str]:
    rng = random.Random(909)
    found = violations = checks = 0
    while found < 100:
        m = rng.randint(2, 8)
        n = rng.randint(1, 3)
        # small p leaves many larger values to check
        inst = random_instance(rng, m, n, rng.randint(1, max(1, m // 2)))
        if solve_exhaustive(inst, PROP).status is not Status.YES:
            continue
        found += 1
        for p in range(inst.p + 1, m + 1):
            checks += 1
            violations += solve_exhaustive(inst.with_p(p), PROP).status is not Status.YES
    return violations == 0, f"{found} Yes-instances, {checks} larger p checked, violations {violations}"


# --------------------------------------------------------------------------- 10


def _cli(args: list[str], cwd: Path) -> tuple[int, bytes, bytes]:
    proc = subprocess.run([sys.executable, "-m", "icfd", *args], cwd=cwd, capture_output=True, check=False)
    return proc.returncode, proc.stdout, proc.stderr


def criterion_10(workdir: Path) -> tuple[bool, str]:
    (workdir / "ksum.txt").write_text("2 3 1 2 3 4\n")
    (workdir / "rbds.txt").write_text("2 3 2\n0 0\n1 1\n1 2\n")
    commands = [
        ["generate", "ksum-ef", "--source", "ksum.txt", "--out", "star.icfd", "--witness-out", "star.alloc"],
        ["generate", "ksum-efx", "--source", "ksum.txt", "--out", "path.icfd", "--witness-out", "path.alloc"],
        ["generate", "rbds-prop", "--source", "rbds.txt", "--out", "rp.icfd", "--witness-out", "rp.alloc"],
        ["generate", "rbds-ef1", "--source", "rbds.txt", "--out", "big.icfd", "--witness-out", "big.alloc"],
        ["generate", "random", "--m", "7", "--n", "2", "--p", "4", "--seed", "11", "--out", "rand.icfd"],
        ["solve", "--notion", "ef", "--input", "star.icfd", "--method", "brute", "--witness", "s1.alloc"],
        ["solve", "--notion", "efx", "--input", "path.icfd", "--witness", "s2.alloc"],
        ["solve", "--notion", "prop", "--input", "rp.icfd", "--method", "colorcode", "--seed", "4", "--witness", "s3.alloc"],
        ["solve", "--notion", "prop", "--input", "rand.icfd", "--method", "colorcode", "--inner", "colorcode", "--seed", "2"],
        ["solve", "--notion", "ef1", "--input", "rand.icfd", "--kernelize", "--json", "--witness", "s4.alloc"],
        ["verify", "--notion", "efx", "--input", "path.icfd", "--allocation", "path.alloc"],
        ["verify", "--notion", "ef1", "--input", "big.icfd", "--allocation", "big.alloc"],
        ["verify", "--notion", "ef", "--input", "rp.icfd", "--allocation", "rp.alloc"],
        ["kernelize", "--notion", "prop", "--input", "rand.icfd", "--out", "kp.icfd"],
        ["kernelize", "--notion", "ef", "--input", "star.icfd", "--out", "ke.icfd", "--json"],
        ["stats", "--input", "big.icfd"],
    ]
    differing = []
    for argv in commands:
        runs = []
        for _ in range(2):
            code, out, err = _cli(argv, workdir)
            files = tuple(sorted((p.name, p.read_bytes()) for p in workdir.iterdir()))
            runs.append((code, out, err, files))
        if runs[0] != runs[1]:
            differing.append(argv[0])
    return not differing, f"{len(commands)} commands run twice, differing outputs {len(differing)}"


# --------------------------------------------------------------------------- pytest wrappers


def _run(number: int, fn, *args) -> tuple[bool, str]:
    start = time.perf_counter()
    ok, detail = fn(*args)
    return ok, f"criterion {number}: {'PASS' if ok else 'FAIL'} ({time.perf_counter() - start:.1f}s) {detail}"


def _record(number: int, fn, *args) -> None:
    from conftest import ACCEPTANCE_LINES

    ok, line = _run(number, fn, *args)
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_fairness_implications():
    _record(1, criterion_1)


def test_criterion_2_envy_rule_safety():
    _record(2, criterion_2)


def test_criterion_3_prop_pipeline_safety():
    _record(3, criterion_3)


def test_criterion_4_kernel_size_bounds():
    _record(4, criterion_4)


def test_criterion_5_colorful_dp():
    _record(5, criterion_5)


def test_criterion_6_colorcode_soundness_and_calibration():
    _record(6, criterion_6)


def test_criterion_7_reduction_equivalences():
    _record(7, criterion_7)


def test_criterion_8_two_type_gadget_witness():
    _record(8, criterion_8)


def test_criterion_9_prop_monotone_in_p():
    _record(9, criterion_9)


def test_criterion_10_cli_determinism(tmp_path):
    _record(10, criterion_10, tmp_path)


if __name__ == "__main__":
    import tempfile

    criteria = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9]
    results = []
    for number, fn in enumerate(criteria, start=1):
        ok, line = _run(number, fn)
        print(line, flush=True)
        results.append(ok)
    with tempfile.TemporaryDirectory() as tmp:
        ok, line = _run(10, criterion_10, Path(tmp))
        print(line)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
