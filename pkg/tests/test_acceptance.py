"""Acceptance checks for the package's headline guarantees.

Each test prints exactly one pass/fail line, so a run with -s reads as
a checklist.  Tolerances and time budgets are pinned here, not shared
with the unit tests.
"""

import time

import numpy as np

from qbn.inference import Plan, execute, infer, plan
from qbn.learning import init_priors, learn_batch, load_dataset
from qbn.model import (BetaStat, NetworkStructure, Query, Variable,
                       load_network)
from qbn.oracle import (build_joint, chain_experiment, exact_beta,
                        product_form_dataset)
from qbn.transforms import (arc_reversal, node_merging, node_removal,
                            node_splitting)

NET = "data/family_out.net"
CSV = "data/family_out.csv"
FO, BP, LO, DO, HB = range(5)

# with-prior count tables learned from the bundled 100-sample dataset,
# rows in parent row-index order, cells in domain order
EXPECTED_CELLS = {
    "FO": (((33, 69), (69, 33)),),
    "BP": (((12, 90), (90, 12)),),
    "LO": (((24, 10), (10, 24)), ((7, 63), (63, 7))),
    "DO": (((6, 1), (1, 6)), ((17, 12), (12, 17)),
           ((4, 4), (4, 4)), ((13, 51), (51, 13))),
    "HB": (((34, 4), (4, 34)), ((3, 63), (63, 3))),
}


def _verdict(n: int, ok: bool, msg: str) -> None:
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {msg}")


def _family_net():
    structure = load_network(NET)
    data = load_dataset(CSV, structure)
    return learn_batch(init_priors(structure), data), structure, data


def _restored(net, vid, parent_vals, label):
    cpt = net.cpt(vid)
    j = cpt.row_index(parent_vals)
    k = net.var(vid).domain.index(label)
    return net.cell(vid, j, k, with_prior=True)


def test_criterion_1_learned_tables_exact():
    t0 = time.perf_counter()
    net, structure, _ = _family_net()
    by_name = {var.name: vid for vid, var in structure.variables.items()}
    n_checked = 0
    mismatches = []
    for name, rows in EXPECTED_CELLS.items():
        vid = by_name[name]
        for j, cells in enumerate(rows):
            for k, (ea, eo) in enumerate(cells):
                got = net.cell(vid, j, k, with_prior=True)
                n_checked += 1
                if got.alpha != ea or got.omega != eo:
                    mismatches.append((name, j, k, got, (ea, eo)))
    elapsed = time.perf_counter() - t0
    ok = not mismatches and n_checked == 20 and elapsed < 1.0
    _verdict(1, ok, f"all {n_checked} with-prior cells exact "
                    f"in {elapsed:.3f}s")
    assert mismatches == []
    assert n_checked == 20
    assert elapsed < 1.0


def test_criterion_2_reversal_pipeline():
    t0 = time.perf_counter()
    net, _, _ = _family_net()
    net, _ = arc_reversal(net, FO, LO)
    got = [_restored(net, FO, {LO: 0}, "fo")]
    net, _ = node_removal(net, DO, BP)
    got.append(_restored(net, DO, {FO: 0}, "do"))
    net, _ = arc_reversal(net, DO, HB)
    got.append(_restored(net, DO, {FO: 0, HB: 0}, "do"))
    net, _ = arc_reversal(net, FO, HB)
    got.append(_restored(net, FO, {LO: 0, HB: 0}, "fo"))
    elapsed = time.perf_counter() - t0
    want = ((24.0, 7.0), (22.0, 12.0), (20.25, 1.34), (15.08, 2.36))
    errs = [max(abs(g.alpha - wa), abs(g.omega - wo))
            for g, (wa, wo) in zip(got, want)]
    ok = max(errs) <= 0.01 and elapsed < 1.0
    _verdict(2, ok, f"four-step pipeline intermediates within 0.01 "
                    f"(worst {max(errs):.4f}) in {elapsed:.3f}s")
    assert max(errs) <= 0.01, list(zip(got, want))
    assert elapsed < 1.0


def test_criterion_3_joint_oracle_reference_values():
    _, structure, data = _family_net()
    joint = build_joint(structure, data)
    do_cell = exact_beta(joint, Query(((DO, 0),), ((FO, 0), (HB, 0))))
    fo_cell = exact_beta(joint, Query(((FO, 0),), ((LO, 0), (HB, 0))))
    ok = (do_cell.alpha, do_cell.omega) == (20.0, 2.0) and \
         (fo_cell.alpha, fo_cell.omega) == (16.0, 2.0)
    _verdict(3, ok, f"oracle gives beta({do_cell.alpha:g}, "
                    f"{do_cell.omega:g}) and beta({fo_cell.alpha:g}, "
                    f"{fo_cell.omega:g}) for the reference queries")
    assert (do_cell.alpha, do_cell.omega) == (20.0, 2.0)
    assert (fo_cell.alpha, fo_cell.omega) == (16.0, 2.0)


def _random_structure(rng, max_nodes=5):
    n = int(rng.integers(2, max_nodes + 1))
    variables = {}
    parents = {}
    for vid in range(n):
        variables[vid] = Variable(vid, f"X{vid}", ("v0", "v1"))
        cand = list(range(vid))
        rng.shuffle(cand)
        k = int(rng.integers(0, min(3, vid) + 1))
        parents[vid] = tuple(sorted(cand[:k]))
    return NetworkStructure(variables, parents)


def _random_query(rng, s):
    ids = list(s.node_ids())
    rng.shuffle(ids)
    n_t = int(rng.integers(1, len(ids) + 1))
    targets = tuple((v, int(rng.integers(0, s.var(v).size)))
                    for v in ids[:n_t])
    rest = ids[n_t:]
    n_e = int(rng.integers(0, len(rest) + 1))
    evidence = tuple((v, int(rng.integers(0, s.var(v).size)))
                     for v in rest[:n_e])
    return Query(targets=targets, evidence=evidence)


def _atoms(var, k):
    if var.is_compound:
        return tuple(var.factor_digits(k).items())
    return ((var.vid, k),)


def _table_errors(joint, qbn):
    """Worst deviation of any with-prior cell from the joint oracle."""
    worst = 0.0
    n_cells = 0
    for vid in sorted(qbn.structure.variables):
        var = qbn.var(vid)
        cpt = qbn.cpt(vid)
        for j in range(cpt.n_rows):
            ev = []
            for p, pk in cpt.row_assignment(j).items():
                ev.extend(_atoms(qbn.var(p), pk))
            for k in range(var.size):
                want = exact_beta(joint, Query(_atoms(var, k), tuple(ev)))
                got = qbn.cell(vid, j, k, with_prior=True)
                worst = max(worst, abs(got.alpha - want.alpha),
                            abs(got.omega - want.omega))
                n_cells += 1
    return worst, n_cells


def test_criterion_4_transform_outputs_match_joint():
    tol = 1e-9
    rng = np.random.default_rng(20260813)
    n_networks = 100
    worst = 0.0
    n_cells = 0
    for _ in range(n_networks):
        s = _random_structure(rng)
        data = product_form_dataset(s, rng)
        net = learn_batch(init_priors(s), data)
        joint = build_joint(s, data)
        for _ in range(2):
            q = _random_query(rng, s)
            p = plan(s, q)
            for i in range(len(p.steps)):
                partial, _ = execute(net, Plan(steps=p.steps[:i + 1],
                                               target=p.target,
                                               pruned=p.pruned))
                err, cells = _table_errors(joint, partial)
                worst = max(worst, err)
                n_cells += cells
                assert err <= tol, (s.parents, q, p.steps[i])
            r = infer(net, q)
            want = exact_beta(joint, q)
            worst = max(worst, abs(r.stat.alpha - want.alpha),
                        abs(r.stat.omega - want.omega))
            assert abs(r.stat.alpha - want.alpha) <= tol, (s.parents, q)
            assert abs(r.stat.omega - want.omega) <= tol, (s.parents, q)
    ok = worst <= tol
    _verdict(4, ok, f"{n_networks} networks, every transformed table "
                    f"({n_cells} cells) and answer within {tol:g} "
                    f"(worst {worst:.2e})")
    assert ok


def test_criterion_5_variance_bound_holds():
    n = 100_000
    rng = np.random.default_rng(5)
    alphas = (1.0 - rng.random(n)) * 1e6
    omegas = (1.0 - rng.random(n)) * 1e6
    violations = 0
    for a, o in zip(alphas, omegas):
        stat = BetaStat(a, o)
        if not stat.variance < stat.variance_bound:
            violations += 1
    ok = violations == 0
    _verdict(5, ok, f"variance < 1/(alpha+omega+1) on {n} random pairs "
                    f"in (0, 1e6], {violations} violations")
    assert violations == 0


def test_criterion_6_additivity_and_merge_split_round_trip():
    net_full, structure, data = _family_net()
    first, second = data.split(37)
    net_seq = learn_batch(learn_batch(init_priors(structure), first), second)
    additive = all(
        np.array_equal(net_seq.cpt(v).alpha, net_full.cpt(v).alpha)
        and np.array_equal(net_seq.cpt(v).omega, net_full.cpt(v).omega)
        for v in structure.node_ids())

    rng = np.random.default_rng(7)
    variables = {0: Variable(0, "A", ("y", "n")),
                 1: Variable(1, "B", ("y", "n"))}
    pair = NetworkStructure(variables, {0: (), 1: (0,)})
    net = learn_batch(init_priors(pair), product_form_dataset(pair, rng))
    merged, rec = node_merging(net, 1, 0)
    back, _ = node_splitting(merged, rec.operands[2], 0)
    round_trip = all(
        back.cpt(v).parent_ids == net.cpt(v).parent_ids
        and np.array_equal(back.cpt(v).alpha, net.cpt(v).alpha)
        and np.array_equal(back.cpt(v).omega, net.cpt(v).omega)
        for v in (0, 1))

    ok = additive and round_trip
    _verdict(6, ok, "split-dataset learning adds up exactly and "
                    "merge/split restores every cell")
    assert additive
    assert round_trip


def test_criterion_7_sample_size_improves_accuracy():
    t0 = time.perf_counter()
    report = chain_experiment(lengths=(3, 4, 5, 6), sizes=(100, 10000),
                              seeds=tuple(range(30)))
    elapsed = time.perf_counter() - t0
    medians = report.median_abs_err()
    gaps = {ln: (medians[(ln, 10000)], medians[(ln, 100)])
            for ln in (3, 4, 5, 6)}
    monotone = all(hi < lo for hi, lo in gaps.values())
    ok = monotone and elapsed < 60.0
    detail = ", ".join(f"len {ln}: {hi:.4f} < {lo:.4f}"
                       for ln, (hi, lo) in gaps.items())
    _verdict(7, ok, f"median error shrinks with sample size ({detail}) "
                    f"in {elapsed:.1f}s")
    assert monotone, gaps
    assert elapsed < 60.0
