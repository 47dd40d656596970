"""Structure transformations and their count reconstructions."""

import numpy as np
import pytest

from qbn.errors import StructureError
from qbn.learning import Dataset, init_priors, learn_batch
from qbn.model import BetaStat, Query, parse_network
from qbn.oracle import build_joint, exact_beta, product_form_dataset, random_dag
from qbn.transforms import (
    arc_reversal,
    node_merging,
    node_removal,
    node_splitting,
    product_merge,
    prune_barren,
    restore_prior,
    strip_prior,
)

FO, BP, LO, DO, HB = range(5)


def _restored(net, vid, row, k):
    cpt = net.cpts[vid]
    j = cpt.row_index(row)
    return restore_prior(cpt.cell(j, k), net.var(vid).size)


class TestManualPipeline:
    """The four-step rewrite that turns the family-out network into an
    explicit table for P(FO=fo | LO=lo, HB=hb), checked cell by cell."""

    def test_step1_reverse_fo_lo(self, family_net):
        net, rec = arc_reversal(family_net, FO, LO)
        assert net.structure.parents_of(FO) == (LO,)
        assert net.structure.parents_of(LO) == ()
        got = _restored(net, FO, {LO: 0}, 0)
        assert (got.alpha, got.omega) == (24, 7)
        # the marginal side picks up the column totals
        lo_marginal = net.cpts[LO].cell(0, 0)
        assert (lo_marginal.alpha, lo_marginal.omega) == (29, 71)
        assert rec.kind == "reversal" and not rec.approximate

    def test_step2_remove_bp(self, family_net):
        net, _ = arc_reversal(family_net, FO, LO)
        net, rec = node_removal(net, DO, BP)
        assert BP not in net.structure.variables
        assert net.structure.parents_of(DO) == (FO,)
        got = _restored(net, DO, {FO: 0}, 0)
        assert (got.alpha, got.omega) == (22, 12)
        assert rec.removed_nodes == (BP,)

    def test_step3_reverse_do_hb(self, family_net):
        net, _ = arc_reversal(family_net, FO, LO)
        net, _ = node_removal(net, DO, BP)
        net, _ = arc_reversal(net, DO, HB)
        assert net.structure.parents_of(DO) == (FO, HB)
        assert net.structure.parents_of(HB) == (FO,)
        got = _restored(net, DO, {FO: 0, HB: 0}, 0)
        assert got.alpha == pytest.approx(20.25, abs=1e-12)
        assert got.omega == pytest.approx(1.34375, abs=1e-12)

    def test_step4_reverse_fo_hb(self, family_net):
        net, _ = arc_reversal(family_net, FO, LO)
        net, _ = node_removal(net, DO, BP)
        net, _ = arc_reversal(net, DO, HB)
        net, _ = arc_reversal(net, FO, HB)
        assert net.structure.parents_of(FO) == (LO, HB)
        got = _restored(net, FO, {LO: 0, HB: 0}, 0)
        assert got.alpha == pytest.approx(15.0830078125, abs=1e-12)
        assert got.omega == pytest.approx(2.359375, abs=1e-12)
        # the published two-decimal rounding
        assert got.alpha == pytest.approx(15.08, abs=0.01)
        assert got.omega == pytest.approx(2.36, abs=0.01)


class TestNodeRemoval:
    def test_requires_sole_child(self, family_net):
        with pytest.raises(StructureError):
            node_removal(family_net, LO, FO)  # FO also feeds DO

    def test_requires_edge(self, family_net):
        with pytest.raises(StructureError):
            node_removal(family_net, HB, BP)

    def test_parent_with_parents_survives_childless(self, family_net):
        net, _ = node_removal(family_net, HB, DO)
        assert DO in net.structure.variables
        assert net.structure.children_of(DO) == ()
        assert net.structure.parents_of(HB) == (FO, BP)

    def test_root_removal_is_marginal_count(self, family_net):
        # BP is parentless, so the reconstruction weights are exact
        net, rec = node_removal(family_net, DO, BP)
        do = net.cpts[DO]
        assert do.alpha[0, 0] == pytest.approx(21)
        assert do.omega[0, 0] == pytest.approx(11)
        assert rec.zero_denominators == 0


class TestArcReversal:
    def test_requires_edge(self, family_net):
        with pytest.raises(StructureError):
            arc_reversal(family_net, LO, HB)

    def test_rejects_alternate_path(self):
        s = parse_network("node A : y, n\nnode B : y, n\nnode C : y, n\n"
                          "edge A -> B\nedge A -> C\nedge B -> C")
        net = init_priors(s)
        with pytest.raises(StructureError):
            arc_reversal(net, 0, 2)

    def test_double_reversal_restores_root_child_pair(self, family_net):
        once, _ = arc_reversal(family_net, FO, LO)
        twice, _ = arc_reversal(once, LO, FO)
        np.testing.assert_allclose(twice.cpts[LO].alpha,
                                   family_net.cpts[LO].alpha)
        np.testing.assert_allclose(twice.cpts[LO].omega,
                                   family_net.cpts[LO].omega)
        np.testing.assert_allclose(twice.cpts[FO].alpha,
                                   family_net.cpts[FO].alpha)

    def test_new_tables_nonnegative(self, family_net):
        net, _ = arc_reversal(family_net, DO, HB)
        for vid in (DO, HB):
            assert (net.cpts[vid].alpha >= 0).all()
            assert (net.cpts[vid].omega >= 0).all()


class TestMergeSplit:
    def test_merge_preconditions(self, family_net):
        with pytest.raises(StructureError):
            node_merging(family_net, DO, FO)  # FO also feeds LO
        with pytest.raises(StructureError):
            node_merging(family_net, DO, BP)  # DO has a child

    def test_merge_creates_compound(self, family_net):
        net, rec = node_merging(family_net, HB, DO)
        new_vid = rec.operands[2]
        assert new_vid == max(family_net.structure.variables) + 1
        var = net.var(new_vid)
        assert var.is_compound
        assert tuple(f.vid for f in var.factors) == (HB, DO)
        assert net.structure.parents_of(new_vid) == (FO, BP)
        assert DO not in net.structure.variables

    def test_merge_rows_conserve_mass(self, family_net):
        net, rec = node_merging(family_net, HB, DO)
        cpt = net.cpts[rec.operands[2]]
        np.testing.assert_allclose(
            cpt.alpha + cpt.omega - cpt.alpha.sum(axis=1, keepdims=True),
            0.0, atol=1e-12)

    def test_split_requires_compound(self, family_net):
        with pytest.raises(StructureError):
            node_splitting(family_net, HB, HB)

    def test_split_requires_known_factor(self, family_net):
        net, rec = node_merging(family_net, HB, DO)
        with pytest.raises(StructureError):
            node_splitting(net, rec.operands[2], FO)

    def test_round_trip_on_root_child_pair(self):
        s = parse_network("node A : y, n\nnode B : u, v, w\nedge A -> B")
        rng = np.random.default_rng(5)
        net = learn_batch(init_priors(s), product_form_dataset(s, rng))
        merged, rec = node_merging(net, 1, 0)
        back, split_rec = node_splitting(merged, rec.operands[2], 0)
        assert set(back.structure.variables) == {0, 1}
        assert back.structure.parents_of(1) == (0,)
        for vid in (0, 1):
            np.testing.assert_allclose(back.cpts[vid].alpha,
                                       net.cpts[vid].alpha, atol=1e-9)
            np.testing.assert_allclose(back.cpts[vid].omega,
                                       net.cpts[vid].omega, atol=1e-9)

    def test_split_keeps_compound_id_until_last_factor(self, family_net):
        net, rec1 = node_merging(family_net, HB, DO)
        comp1 = rec1.operands[2]
        net, rec2 = node_merging(net, comp1, BP)
        comp2 = rec2.operands[2]
        assert tuple(f.vid for f in net.var(comp2).factors) == (HB, DO, BP)
        net, rec3 = node_splitting(net, comp2, HB)
        assert rec3.operands[2] == comp2  # two factors left, id retained
        assert tuple(f.vid for f in net.var(comp2).factors) == (DO, BP)
        net, rec4 = node_splitting(net, comp2, DO)
        assert rec4.operands[2] == BP  # single factor resumes its own id
        assert not net.var(BP).is_compound


class TestProductMerge:
    def test_requires_isolated_operands(self, family_net):
        with pytest.raises(StructureError):
            product_merge(family_net, FO, BP)

    def test_joint_of_independent_marginals(self):
        s = parse_network("node A : y, n\nnode B : y, n")
        counts = Dataset((0, 1), np.array(
            [[0, 0]] * 6 + [[0, 1]] * 2 + [[1, 0]] * 9 + [[1, 1]] * 3))
        net = learn_batch(init_priors(s), counts)
        merged, rec = product_merge(net, 0, 1)
        cpt = merged.cpts[rec.operands[2]]
        # counts factorize: 20 samples, A=y mass 8, B=y mass 15
        np.testing.assert_allclose(cpt.alpha[0], [6, 2, 9, 3])
        np.testing.assert_allclose(cpt.alpha[0] + cpt.omega[0], 20)


class TestPrune:
    def test_rejects_node_with_children(self, family_net):
        with pytest.raises(StructureError):
            prune_barren(family_net, DO)

    def test_removes_table(self, family_net):
        net, rec = prune_barren(family_net, HB)
        assert HB not in net.structure.variables
        assert HB not in net.cpts
        assert rec.removed_nodes == (HB,)


class TestZeroDenominator:
    def _net_with_unseen_value(self):
        s = parse_network("node A : y, n\nnode B : y, n, zip\n"
                          "node C : y, n\nedge A -> B\nedge B -> C")
        samples = []
        rng = np.random.default_rng(11)
        for _ in range(40):
            a = int(rng.integers(2))
            b = int(rng.integers(2))  # value "zip" never occurs
            c = int(rng.integers(2))
            samples.append({0: a, 1: b, 2: c})
        return learn_batch(init_priors(s), Dataset.from_samples(s, samples))

    def test_removal_counts_dropped_terms(self):
        net = self._net_with_unseen_value()
        out, rec = node_removal(net, 2, 1)
        assert rec.zero_denominators > 0
        assert rec.approximate
        assert np.isfinite(out.cpts[2].alpha).all()
        assert (out.cpts[2].alpha >= 0).all()

    def test_exact_when_all_values_seen(self, family_net):
        _, rec = node_removal(family_net, HB, DO)
        assert rec.zero_denominators == 0


class TestPriorHandling:
    def test_strip_returns_raw_copy(self, family_net):
        raw = strip_prior(family_net, FO)
        assert raw.cell(0, 0) == BetaStat(32, 68)
        raw.alpha[0, 0] = 99
        assert family_net.cpts[FO].alpha[0, 0] == 32

    def test_restore_adds_joint_shaped_default(self):
        assert restore_prior(BetaStat(5, 7), 4) == BetaStat(6, 10)


class TestOracleAgreement:
    """Each transformation's rewritten cells, restored, must match
    joint-count conditionals exactly when the data factorizes."""

    def _cases(self, rng, n_nodes):
        s = random_dag(rng, n_nodes, edge_prob=0.6, max_values=3)
        data = product_form_dataset(s, rng)
        net = learn_batch(init_priors(s), data)
        return s, net, build_joint(s, data)

    def _check_table(self, net, joint, vid):
        var = net.var(vid)
        cpt = net.cpts[vid]
        for j in range(cpt.n_rows):
            row = cpt.row_assignment(j)
            for k in range(cpt.n_values):
                if var.is_compound:
                    targets = tuple(var.factor_digits(k).items())
                else:
                    targets = ((vid, k),)
                want = exact_beta(joint, Query(
                    targets=targets, evidence=tuple(row.items())))
                got = restore_prior(cpt.cell(j, k), var.size)
                assert got.alpha == pytest.approx(want.alpha, abs=1e-9)
                assert got.omega == pytest.approx(want.omega, abs=1e-9)

    def test_removal_matches_oracle(self, rng):
        hits = 0
        while hits < 5:
            s, net, joint = self._cases(rng, 4)
            for p in s.node_ids():
                kids = s.children_of(p)
                if len(kids) != 1:
                    continue
                out, _ = node_removal(net, kids[0], p)
                self._check_table(out, joint, kids[0])
                hits += 1

    def test_reversal_matches_oracle(self, rng):
        hits = 0
        while hits < 5:
            s, net, joint = self._cases(rng, 4)
            for c in s.node_ids():
                for p in s.parents_of(c):
                    if s.has_path(p, c, skip_edge=(p, c)):
                        continue
                    out, _ = arc_reversal(net, p, c)
                    self._check_table(out, joint, p)
                    self._check_table(out, joint, c)
                    hits += 1

    def test_merge_matches_oracle(self, rng):
        hits = 0
        while hits < 5:
            s, net, joint = self._cases(rng, 4)
            for p in s.node_ids():
                kids = s.children_of(p)
                if len(kids) != 1 or s.children_of(kids[0]):
                    continue
                out, rec = node_merging(net, kids[0], p)
                self._check_table(out, joint, rec.operands[2])
                hits += 1
