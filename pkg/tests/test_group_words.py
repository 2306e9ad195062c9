import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hypcocycles import hyp_core as hc
from hypcocycles.group_words import (
    GroupRep,
    PingPongError,
    Word,
    boundary_arc_check,
    evaluate,
    evaluate_mat2,
    free_reduce,
    genus2_relator,
    iter_reduced_words,
    octagon_inradius,
    octagon_vertex_radius,
    ping_pong_check,
    projective_residual,
    random_word,
    schottky_disks,
    volume_cocycle,
    word_inverse,
    word_multiply,
)
from hypcocycles.hyp_core import Mat2

import oracles

letters4 = st.lists(st.sampled_from([1, -1, 2, -2, 3, -3, 4, -4]), max_size=10)


def test_free_reduce_cancels():
    assert free_reduce([1, 2, -2, -1, 3]) == (3,)
    assert Word([1, -1]) == Word(())
    assert len(Word([2, 1, -1, 3])) == 2


@given(letters4)
def test_reduced_words_have_no_cancellation(xs):
    w = Word(xs)
    assert all(a != -b for a, b in zip(w.letters, w.letters[1:]))


@given(letters4, letters4, letters4)
def test_word_group_laws(a, b, c):
    u, v, w = Word(a), Word(b), Word(c)
    assert (u * v) * w == u * (v * w)
    assert u * u.inverse() == Word(())
    assert word_inverse(word_multiply(u, v)) == v.inverse() * u.inverse()


@given(letters4)
def test_parse_format_round_trip(xs):
    w = Word(xs)
    assert Word.parse(w.format()) == w


def test_parse_syntax():
    assert Word.parse("a1 b1^-1") == Word([1, -2])
    assert Word.parse("a1*b2") == Word([1, 4])
    assert Word.parse("e") == Word(())
    assert Word.parse("a2^3") == Word([3, 3, 3])
    with pytest.raises(ValueError):
        Word.parse("c7")


def test_iter_reduced_words_counts():
    ws = list(iter_reduced_words(2, 3))
    # 1 + 4 + 4*3 + 4*9
    assert len(ws) == 53
    assert len(set(ws)) == 53


def test_random_word_length():
    rng = np.random.default_rng(0)
    for n in range(8):
        assert len(random_word(rng, 4, n)) == n


@given(letters4, letters4)
def test_evaluate_is_a_homomorphism(a, b):
    from hypcocycles.group_words import genus2_standard_rep

    rep = genus2_standard_rep()
    u, v = Word(a), Word(b)
    lhs = evaluate(rep, u * v).matrix
    rhs = evaluate(rep, u).matrix @ evaluate(rep, v).matrix
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * np.max(np.abs(rhs)))


def test_letters_out_of_range(rep2):
    with pytest.raises(ValueError):
        evaluate(rep2, Word([5]))


def test_mat2_lifts_match_lorentz_generators(rep2):
    for g, m in zip(rep2.generators, rep2.mat2):
        assert hc.from_sl2_real(m).close_to(g, 1e-9)


def test_octagon_radius_matches_closed_form():
    assert octagon_vertex_radius() == pytest.approx(oracles.regular_octagon_vertex_radius(), abs=1e-13)
    assert octagon_inradius() == pytest.approx(oracles.regular_octagon_inradius(), abs=1e-12)


def test_generators_translate_by_twice_the_inradius(rep2):
    o = hc.KleinPoint.origin()
    h = oracles.regular_octagon_inradius()
    for g in rep2.generators:
        assert hc.hyp_distance(o, hc.apply(g, o)) == pytest.approx(2 * h, abs=1e-9)
        assert abs(rep2.mat2[0].trace.real) > 2


def test_relator(rep2):
    rel = genus2_relator(rep2)
    assert len(rel) == 8
    assert sorted(rel.letters) == [-4, -3, -2, -1, 1, 2, 3, 4]
    assert projective_residual(evaluate_mat2(rep2, rel)) < 1e-9
    assert evaluate(rep2, rel).close_to(hc.identity(), 1e-8)


def test_cyclic_conjugates_of_relator_are_trivial(rep2):
    rel = genus2_relator(rep2).letters
    for j in range(8):
        w = Word(rel[j:] + rel[:j])
        assert projective_residual(evaluate_mat2(rep2, w)) < 1e-9


def test_json_round_trip(rep2):
    back = GroupRep.from_json(rep2.to_json())
    assert back.names == rep2.names and back.dim == 2
    for g, h in zip(rep2.generators, back.generators):
        assert np.array_equal(g.matrix, h.matrix)
    assert np.allclose(back.mat2[1].entries, rep2.mat2[1].entries, atol=1e-15)


def test_rep_validation():
    with pytest.raises(hc.DimensionError):
        GroupRep((hc.identity(2), hc.identity(3)), 2)
    with pytest.raises(ValueError):
        GroupRep((), 2)
    with pytest.raises(ValueError):
        GroupRep((hc.identity(2),), 2, names=("a", "b"))


# --- Schottky


def test_schottky_ping_pong(schottky):
    assert ping_pong_check(schottky, schottky_disks())


def test_commuting_rotations_fail_ping_pong():
    rots = [Mat2(np.diag([np.exp(0.5j * t), np.exp(-0.5j * t)])) for t in (0.7, 1.3)]
    rep = GroupRep(tuple(hc.from_sl2_complex(m) for m in rots), 3, "rotations", ("a", "b"), tuple(rots))
    assert not ping_pong_check(rep, schottky_disks())


def test_overlapping_disks_rejected(schottky):
    with pytest.raises(PingPongError):
        ping_pong_check(schottky, [(0, 1), (0.5, 1), (5j, 1), (-5j, 1)])


def test_schottky_mat2_matches_sphere_action(schottky):
    # image circles computed in a second way: through three sample points
    a = schottky.mat2[0]
    cen, rad = oracles.circle_through(*(a(-2 + complex(math.cos(t), math.sin(t))) for t in (0.1, 1.9, 4.0)))
    assert abs(cen - 2) + rad <= 1 + 1e-9


def test_schottky_volumes(schottky):
    e, a, b = Word(()), Word([1]), Word([2])
    # these four orbit points are coplanar: exact zero
    assert volume_cocycle(schottky, [e, a, b, a * b]) == 0.0
    v = volume_cocycle(schottky, [e, a, b.inverse(), a * b])
    assert 0 < abs(v) < 1.01495


def test_genus2_boundary_ping_pong(rep2):
    h = math.pi / 2
    arcs = {"a1+": (0.0, 0.6), "a1-": (math.pi, 0.6), "a2+": (h, 0.6), "a2-": (3 * h, 0.6)}
    assert boundary_arc_check(rep2, arcs, [(0, "a1-", "a1+"), (2, "a2-", "a2+")])
    narrow = {k: (c, 0.3) for k, (c, _) in arcs.items()}
    assert not boundary_arc_check(rep2, narrow, [(0, "a1-", "a1+"), (2, "a2-", "a2+")])


def test_volume_cocycle_arity(rep2):
    with pytest.raises(ValueError):
        volume_cocycle(rep2, [Word(()), Word([1])])


def test_long_words_evaluate_accurately(rep2):
    # entries ~1e13: still Lorentz to relative rounding
    w = Word([1] * 7 + [2, 3, 3])
    g = evaluate(rep2, w)
    assert g.residual() < 1e-12 * np.max(np.abs(g.matrix)) ** 2
    assert evaluate(rep2, w * w.inverse()).close_to(hc.identity(), 1e-12)


def test_area_cocycle_matches_klein_route_on_short_words(rep2):
    from hypcocycles.simplex_volume import GeodesicSimplex, signed_area_2d

    rng = np.random.default_rng(4)
    base = hc.KleinPoint(np.array([0.1, -0.2]))
    for _ in range(40):
        ws = [random_word(rng, 4, int(rng.integers(0, 3))) for _ in range(3)]
        pts = [hc.apply(evaluate(rep2, w), base) for w in ws]
        want = signed_area_2d(GeodesicSimplex(pts)) if len(set(ws)) == 3 else 0.0
        assert volume_cocycle(rep2, ws, base) == pytest.approx(want, abs=1e-9)


def test_area_cocycle_on_far_orbit_points(rep2):
    e = Word(())
    # o, a1^n o, a2^-n o: angle pi/2 at o, the other two tend to 0
    for n in (4, 8, 12):
        v = volume_cocycle(rep2, [e, Word([1] * n), Word([-3] * n)])
        assert -math.pi / 2 < v < -math.pi / 2 + 1e-3 * 10.0 ** (-(n - 4) / 2)
    rng = np.random.default_rng(8)
    for _ in range(100):
        ws = [random_word(rng, 4, int(rng.integers(0, 7))) for _ in range(4)]
        d = sum((-1) ** j * volume_cocycle(rep2, ws[:j] + ws[j + 1:]) for j in range(4))
        assert abs(d) < 1e-9
        assert abs(volume_cocycle(rep2, ws[:3])) < math.pi
