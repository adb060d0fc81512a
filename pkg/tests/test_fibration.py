import random

import pytest

from spectower.complexes import CochainComplex, tensor_product
from spectower.errors import InvariantError, PreconditionError
from spectower.field import Field
from spectower.localsystems import BaseGraph, parse_word
from spectower.matrix import Matrix
from spectower.morse import CellularData, MorseData, morse_complex
from spectower.fibration import (
    FibrationData,
    action_window,
    assemble_fibration,
    chain_transport,
    e2_table,
    leray_serre_compare,
    transport_compose_check,
    truncation_map,
)
from spectower.spectral import map_of_spectral_sequences

from helpers import (
    random_product_fibration,
    random_split_complex,
    random_standard_fiber,
    random_twisted_fibration,
    sphere_base,
)

Q = Field()
F2 = Field(2)
FIELDS = (Field(2), Field(3), Field())


def circle_base():
    g = BaseGraph(["m", "M"], [("a", "M", "m"), ("b", "M", "m")])
    return MorseData(
        g,
        [("m", 0), ("M", 1)],
        [("ta", "M", "m", 1, parse_word(["a"])), ("tb", "M", "m", -1, parse_word(["b"]))],
    )


def circle_fiber(field=Q):
    return CochainComplex.from_generator_entries(field, [("u", 0), ("w", 1)], [])


def klein_fibration(field=Q):
    act = {"b": {1: Matrix.from_rows(field, [[field.normalize(-1)]])}}
    return FibrationData(circle_base(), circle_fiber(field), act)


def hopf_fibration():
    return FibrationData(sphere_base(), circle_fiber(), {}, corrections=[("b0", "w", "b2", "u", 1)])


# -- assembly ------------------------------------------------------------------


def test_point_fiber_reproduces_base_complex():
    md = circle_base()
    point = CochainComplex.from_generator_entries(Q, [("pt", 0)], [])
    sfc = assemble_fibration(FibrationData(md, point, {}))
    from spectower.localsystems import LocalSystem

    base_cx = morse_complex(md, LocalSystem.trivial(md.graph, Q, 1))
    assert sfc.complex.cohomology().dims() == base_cx.cohomology().dims()
    for k in (0,):
        assert sfc.complex.d(k).entries() == base_cx.d(k).entries()


def test_product_tensor_identification():
    # trivial monodromy, no corrections: the tower degenerates at E_2 and
    # E_2 is H(base) (x) H(fiber)
    fd = FibrationData(circle_base(), circle_fiber(), {})
    sfc = assemble_fibration(fd)
    conv = sfc.converge()
    assert conv.certified
    assert conv.einf_total_dims() == {0: 1, 1: 2, 2: 1}
    for r in range(2, sfc.n + 2):
        assert not sfc.page(r).has_nonzero_differential()
    assert sfc.page(2).dims() == {(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): 1}


def test_product_with_nonzero_fiber_differential():
    interval = CochainComplex.from_generator_entries(
        Q, [("v0", 0), ("v1", 0), ("e", 1)], [("v0", "e", -1), ("v1", "e", 1)]
    )
    fd = FibrationData(circle_base(), interval, {})
    sfc = assemble_fibration(fd)
    circle_cx = CochainComplex.from_generator_entries(Q, [("m", 0), ("M", 1)], [])
    oracle = tensor_product(circle_cx, interval).cohomology().dims()
    assert sfc.complex.cohomology().dims() == oracle
    assert sfc.converge().einf_total_dims() == oracle


def test_hopf_fibration_data():
    sfc = assemble_fibration(hopf_fibration())
    conv = sfc.converge()
    assert conv.einf_total_dims() == {0: 1, 3: 1}
    assert sfc.page(2).differential(0, 1).rank() == 1
    assert sfc.page(3).dims() == conv.einf


def test_inconsistent_trajectories_report_lowest_bidegree():
    # one broken pair z -> y -> x with no cancelling partner: the assembled
    # differential cannot square to zero, reported at the source bidegree
    g = BaseGraph(["x", "y", "z"], [("u", "x", "y"), ("v", "y", "z")])
    md = MorseData(
        g,
        [("x", 2), ("y", 1), ("z", 0)],
        [("tu", "x", "y", 1, parse_word(["u"])), ("tv", "y", "z", 1, parse_word(["v"]))],
    )
    point = CochainComplex.from_generator_entries(Q, [("pt", 0)], [])
    with pytest.raises(InvariantError) as err:
        assemble_fibration(FibrationData(md, point, {}))
    assert "(p=0, q=0)" in str(err.value)


def test_correction_constraints_validated():
    with pytest.raises(Exception):
        FibrationData(sphere_base(), circle_fiber(), {}, corrections=[("b0", "u", "b2", "u", 1)])


def test_edge_action_must_be_chain_map():
    fiber = CochainComplex.from_generator_entries(Q, [("u", 0), ("w", 1)], [("u", "w", 1)])
    bad = {"a": {0: Matrix.from_rows(Q, [[2]])}}  # degree 1 block defaults to 1: not a chain map
    with pytest.raises(InvariantError):
        FibrationData(circle_base(), fiber, bad)


# -- e2 ------------------------------------------------------------------------


def test_e2_acyclic_fiber_zero_table():
    fiber = CochainComplex.from_generator_entries(Q, [("x", 0), ("y", 1)], [("x", "y", 1)])
    fd = FibrationData(circle_base(), fiber, {})
    t = e2_table(fd)
    assert t.entries == {}
    sfc = assemble_fibration(fd)
    assert sfc.complex.cohomology().dims() == {}
    for r in range(2, sfc.n + 2):
        assert sfc.page(r).dims() == {}


def test_e2_product_torus():
    t = e2_table(FibrationData(circle_base(), circle_fiber(), {}))
    assert t.entries == {(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): 1}


def test_e2_klein_column():
    t = e2_table(klein_fibration())
    assert t.entries == {(0, 0): 1, (1, 0): 1}
    # q = 0 column is the trivial system: H^*(circle) = (1, 1); q = 1 dies
    assert 1 not in {q for _, q in t.entries}


def test_e2_swap_monodromy_over_f2():
    # rank-2 fiber in degree 0 whose generators are swapped around the loop:
    # twisted column (1, 1) over F_2
    g = circle_base()
    fiber = CochainComplex.from_generator_entries(F2, [("x", 0), ("y", 0)], [])
    swap = Matrix.from_entries(F2, 2, 2, [(0, 1, 1), (1, 0, 1)])
    fd = FibrationData(g, fiber, {"b": {0: swap}})
    t = e2_table(fd)
    assert t.entries == {(0, 0): 1, (1, 0): 1}


def test_e2_shifted_display():
    fd = FibrationData(circle_base(), circle_fiber(), {}, shift_n=-1, shift_k=2)
    t = e2_table(fd)
    assert t.shifted_entries() == {(-1, 2): 1, (-1, 3): 1, (0, 2): 1, (0, 3): 1}


def test_grading_shift_covariance():
    # shifting all fiber degrees by s shifts every q by s and nothing else
    rng = random.Random(17)
    for field in FIELDS:
        fd = random_twisted_fibration(rng, field)
        t0 = e2_table(fd)
        s = rng.choice([-2, 1, 3])
        shifted = FibrationData(fd.base, fd.fiber.shifted(s),
                                {e: {k + s: m for k, m in blocks.items()}
                                 for e, blocks in fd.edge_action.items()})
        t1 = e2_table(shifted)
        assert t1.entries == {(p, q + s): d for (p, q), d in t0.entries.items()}


# -- Leray-Serre comparison -------------------------------------------------------


def torus_cells():
    return CellularData(
        cells=[("v", 0, None, 1), ("b", 1, None, 1), ("a", 1, None, 1), ("F", 2, None, 1)],
        incidences=[("b", "F", 0, ()), ("a", "F", 0, ())],
        graph=None,
        filtration={"v": 0, "b": 0, "a": 1, "F": 1},
    )


def klein_cells():
    return CellularData(
        cells=[("v", 0, None, 1), ("b", 1, None, 1), ("a", 1, None, 1), ("F", 2, None, 1)],
        incidences=[("b", "F", 2, ()), ("a", "F", 0, ())],
        graph=None,
        filtration={"v": 0, "b": 0, "a": 1, "F": 1},
    )


def test_torus_towers_agree():
    cmp = leray_serre_compare(torus_cells(), FibrationData(circle_base(), circle_fiber(), {}))
    assert cmp.equal and cmp.r1_equal
    assert cmp.h_dims == {0: 1, 1: 2, 2: 1}


def test_klein_towers_agree_over_q_and_f2():
    cmp_q = leray_serre_compare(klein_cells(), klein_fibration())
    assert cmp_q.equal and cmp_q.r1_equal
    assert cmp_q.h_dims == {0: 1, 1: 1}
    cmp_2 = leray_serre_compare(klein_cells(), klein_fibration(F2), field=F2)
    assert cmp_2.equal
    assert cmp_2.h_dims == {0: 1, 1: 2, 2: 1}


def test_mismatched_models_refused():
    with pytest.raises(PreconditionError) as err:
        leray_serre_compare(torus_cells(), klein_fibration())
    assert "total cohomology disagrees" in str(err.value)


def test_unlabeled_cellular_data_refused():
    cd = CellularData(
        cells=[("v", 0, None, 1)], incidences=[], graph=None, filtration=None
    )
    with pytest.raises(PreconditionError):
        leray_serre_compare(cd, klein_fibration())


# -- transport composition ---------------------------------------------------------


def compose_fixture(action_u):
    g = BaseGraph(
        ["x", "y", "z"],
        [("u", "x", "y"), ("v", "y", "z"), ("w", "x", "z")],
        [["u", "v", "~w"]],
    )
    md = MorseData(
        g,
        [("x", 2), ("y", 1), ("z", 0)],
        [
            ("tu", "x", "y", 1, parse_word(["u"])),
            ("tv", "y", "z", 1, parse_word(["v"])),
            ("tg", "x", "z", 1, parse_word(["w"])),
        ],
    )
    fiber = CochainComplex.from_generator_entries(Q, [("a", 0), ("b", 1)], [("a", "b", 1)])
    return FibrationData(md, fiber, action_u)


def test_compose_all_identity():
    fd = compose_fixture({})
    rep = transport_compose_check(fd, "tu", "tv", "tg")
    assert rep.cohomology_equal and rep.chain_equal


def test_compose_literal_concatenation():
    g = BaseGraph(["x", "y", "z"], [("u", "x", "y"), ("v", "y", "z")])
    md = MorseData(
        g,
        [("x", 2), ("y", 1), ("z", 0)],
        [
            ("tu", "x", "y", 1, parse_word(["u"])),
            ("tv", "y", "z", 1, parse_word(["v"])),
            ("tg", "x", "z", 1, parse_word(["u", "v"])),
        ],
    )
    fiber = CochainComplex.from_generator_entries(Q, [("a", 0)], [])
    fd = FibrationData(md, fiber, {"u": {0: Matrix.from_rows(Q, [[2]])}})
    rep = transport_compose_check(fd, "tu", "tv", "tg")
    assert rep.cohomology_equal and rep.chain_equal


def test_compose_chain_homotopic_but_unequal():
    # T_u = I + dh + hd is chain homotopic to the identity but differs from
    # it, while T_gamma = I: equal on cohomology, flagged at chain level
    fd = compose_fixture({"u": {0: Matrix.from_rows(Q, [[2]]), 1: Matrix.from_rows(Q, [[2]])}})
    rep = transport_compose_check(fd, "tu", "tv", "tg")
    assert rep.cohomology_equal
    assert not rep.chain_equal
    assert rep.chain_diff_degrees == (0, 1)
    assert bool(rep)


def test_compose_undeclared_homotopy_rejected():
    g = BaseGraph(["x", "y", "z"], [("u", "x", "y"), ("v", "y", "z"), ("w", "x", "z")])
    md = MorseData(
        g,
        [("x", 2), ("y", 1), ("z", 0)],
        [
            ("tu", "x", "y", 1, parse_word(["u"])),
            ("tv", "y", "z", 1, parse_word(["v"])),
            ("tg", "x", "z", 1, parse_word(["w"])),
        ],
    )
    fiber = CochainComplex.from_generator_entries(Q, [("a", 0)], [])
    fd = FibrationData(md, fiber, {})
    with pytest.raises(PreconditionError):
        transport_compose_check(fd, "tu", "tv", "tg")


def test_compose_non_composable_paths():
    fd = compose_fixture({})
    with pytest.raises(PreconditionError):
        transport_compose_check(fd, "tv", "tu", "tg")


# -- action windows ------------------------------------------------------------


def test_action_window_requires_decreasing():
    rng = random.Random(2)
    sfc = random_split_complex(rng, Q, max_gens=10, max_len=3)
    flat = {g: 0 for g, _ in sfc.complex.basis.generators}
    if any(not sfc.complex.d(k).is_zero() for k in sfc.complex.degrees()):
        with pytest.raises(InvariantError):
            action_window(sfc, flat, None, None)


def test_action_window_and_truncation_maps():
    rng = random.Random(15)
    for field in FIELDS:
        for _ in range(4):
            sfc = random_split_complex(rng, field, max_gens=16, max_len=4)
            action = {}
            for g, k in sfc.complex.basis.generators:
                action[g] = -10 * k + rng.randint(0, 9) / 10
            full = action_window(sfc, action, None, None)
            assert full.complex.cohomology().dims() == sfc.complex.cohomology().dims()
            degs = sorted(sfc.complex.degrees())
            cut = -10 * degs[len(degs) // 2]
            fmap = truncation_map(sfc, action, (None, None), (cut, None))
            maps = map_of_spectral_sequences(fmap)  # squares verified inside
            assert 1 in maps


def test_truncation_window_direction_enforced():
    rng = random.Random(19)
    sfc = random_split_complex(rng, Q, max_gens=10, max_len=2)
    action = {g: -k for g, k in sfc.complex.basis.generators}
    with pytest.raises(PreconditionError):
        truncation_map(sfc, action, (0, None), (-1, None))
    with pytest.raises(PreconditionError):
        truncation_map(sfc, action, (None, 5), (None, 4))


# -- random fibration sweeps ------------------------------------------------------


def test_random_product_fibrations_degenerate():
    rng = random.Random(31)
    for field in FIELDS:
        for _ in range(4):
            fd = random_product_fibration(rng, field)
            sfc = assemble_fibration(fd)
            for r in range(2, sfc.n + 2):
                assert not sfc.page(r).has_nonzero_differential()
            base_h = morse_base_cohomology(fd)
            fib_h = fd.fiber.cohomology().dims()
            want = {}
            for p, dp in base_h.items():
                for q, dq in fib_h.items():
                    want[(p, q)] = dp * dq
            assert sfc.page(2).dims() == {k: v for k, v in want.items() if v}


def morse_base_cohomology(fd):
    from spectower.localsystems import LocalSystem

    cx = morse_complex(fd.base, LocalSystem.trivial(fd.base.graph, fd.fiber.field, 1))
    return cx.cohomology().dims()


def test_random_twisted_fibrations_e2():
    rng = random.Random(33)
    for field in FIELDS:
        for _ in range(4):
            fd = random_twisted_fibration(rng, field)
            t = e2_table(fd)  # raises on any disagreement with page 2
            assert t.entries == assemble_fibration(fd).page(2).dims()
