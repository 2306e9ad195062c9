"""The fourteen acceptance criteria, each logging one PASS/FAIL line.

Run with ``pytest -m acceptance -s`` to see the lines as they happen; they
are also collected into the terminal summary.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from hypcocycles import hyp_core as hc
from hypcocycles.circle_dynamics import (
    MobiusLift,
    RigidRotation,
    WitnessSearchError,
    elliptic_product_search,
    elliptic_rotation_oracle,
    euler_cocycle,
    fixed_point_lift,
    homogeneous_euler,
    non_additivity_witness,
    translation_number,
    word_lift,
)
from hypcocycles.finger_push import (
    TUBE_LETTERS,
    build_finger_system,
    euler_handle,
    gamma,
    gamma_many,
    inequality_report,
    region_masks,
    rho_apply_many,
    volume_handle,
)
from hypcocycles.group_words import (
    Word,
    genus2_relator,
    ping_pong_check,
    projective_residual,
    random_word,
    schottky_disks,
    volume_cocycle,
)
from hypcocycles.pairing import fan_chain, fan_pairing, positivity_certificate
from hypcocycles.simplex_volume import GeodesicSimplex, coboundary_residual, signed_area_2d, signed_volume_3d
from hypcocycles.surface_model import area_measure, sample_points

import oracles

pytestmark = pytest.mark.acceptance

F_LETTERS = [x for t in TUBE_LETTERS for x in (t, -t)]


def random_ball(rng, n, dim, rmax):
    """n points uniform in the Klein ball of radius rmax."""
    out = []
    while len(out) < n:
        x = rng.uniform(-rmax, rmax, dim)
        if x @ x < rmax * rmax:
            out.append(x)
    return out


def f_word(rng, max_len):
    return random_word_on(rng, F_LETTERS, int(rng.integers(0, max_len + 1)))


def random_word_on(rng, letters, n):
    out = []
    while len(out) < n:
        x = int(rng.choice(letters))
        if not out or out[-1] != -x:
            out.append(x)
    return Word(out)


def random_lift(rng):
    if rng.random() < 0.3:
        return RigidRotation(float(rng.uniform(-2, 2)))
    g = hc.compose(hc.rotation(float(rng.uniform(0, 2 * math.pi))),
                   hc.translation(float(rng.uniform(0, 2 * math.pi)), float(rng.uniform(0, 3))))
    return MobiusLift.from_isometry(g).shifted(int(rng.integers(-2, 3)))


def test_c01_2d_cocycle_identity(acceptance_log):
    rng = np.random.default_rng(101)
    configs = [random_ball(rng, 4, 2, 0.99) for _ in range(200)]
    t0 = time.perf_counter()
    worst = max(coboundary_residual(c) for c in configs)
    dt = time.perf_counter() - t0
    ok = worst < 1e-9 and dt < 1.0
    acceptance_log(1, "2D cocycle identity", ok, f"max residual {worst:.2e}, {dt:.2f} s")
    assert ok


def test_c02_2d_boundedness(acceptance_log):
    rng = np.random.default_rng(102)
    t0 = time.perf_counter()
    areas = [signed_area_2d(GeodesicSimplex(random_ball(rng, 3, 2, 1 - 1e-6))) for _ in range(10_000)]
    r = 1 - 1e-8
    ideal = signed_area_2d(GeodesicSimplex([[r * math.cos(t), r * math.sin(t)]
                                            for t in (0, 2 * math.pi / 3, 4 * math.pi / 3)]))
    dt = time.perf_counter() - t0
    big = max(abs(a) for a in areas)
    ok = big < math.pi and ideal > math.pi - 1e-2 and dt < 5.0
    acceptance_log(2, "2D boundedness", ok, f"max |area| {big:.6f}, near-ideal {ideal:.6f}, {dt:.2f} s")
    assert ok


def test_c03_3d_quadrature(acceptance_log):
    t0 = time.perf_counter()
    rng = np.random.default_rng(103)
    # subdivision additivity: cone from an interior point over the four faces
    worst_add = 0.0
    for _ in range(5):
        k = np.array(random_ball(rng, 4, 3, 0.9))
        c = k.mean(axis=0)
        whole = signed_volume_3d(GeodesicSimplex(k), tol=1e-8)
        parts = 0.0
        for j in range(4):
            sub = k.copy()
            sub[j] = c
            parts += signed_volume_3d(GeodesicSimplex(sub), tol=1e-8)
        worst_add = max(worst_add, abs(parts - whole) / abs(whole))
    # regular tetrahedron near the sphere, against 2 Lambda(pi/6) from mpmath
    oracle = 2 * oracles.lobachevsky(math.pi / 6)
    r = 1 - 1e-6
    reg = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / math.sqrt(3) * r
    v_reg = abs(signed_volume_3d(GeodesicSimplex(reg), tol=1e-8))
    # bound on random tuples, some of them close to the sphere
    big = 0.0
    for i in range(1000):
        rmax = 0.999 if i % 2 else 0.95
        big = max(big, abs(signed_volume_3d(GeodesicSimplex(random_ball(rng, 4, 3, rmax)), tol=1e-8)))
    dt = time.perf_counter() - t0
    ok = worst_add < 1e-6 and abs(v_reg - oracle) < 1e-2 and big < 1.01495 and dt < 120
    acceptance_log(3, "3D quadrature", ok,
                   f"additivity {worst_add:.1e}, regular {v_reg:.6f} vs {oracle:.7f}, max |v| {big:.5f}, {dt:.1f} s")
    assert ok


def test_c04_genus2_construction(acceptance_log, octagon):
    rel = genus2_relator(octagon.rep)
    res = projective_residual(octagon.rep.evaluate_mat2(rel))
    ang = octagon.angle_sum() - 2 * math.pi
    est = area_measure(lambda p: np.ones(len(p), dtype=bool), 1_000_000, 0)
    z = (est.value - 4 * math.pi) / est.stderr
    ok = res < 1e-9 and abs(ang) < 1e-10 and abs(z) <= 3 and est.stderr < 0.02
    acceptance_log(4, "genus-2 construction", ok,
                   f"relator residual {res:.1e}, angle sum error {ang:.1e}, "
                   f"area {est.value:.4f} +- {est.stderr:.4f} (z = {z:.2f})")
    assert ok


def test_c05_fan_pairing(acceptance_log, rep2):
    v = fan_pairing(fan_chain(rep2, genus2_relator(rep2)))
    cert = positivity_certificate(rep2)
    err = abs(abs(v) - 4 * math.pi)
    ok = err < 1e-6 and cert["pass"] and abs(cert["pairing"]) > 1e-3
    acceptance_log(5, "fan pairing of the relator", ok, f"pairing {v:.10f}, |err| {err:.1e}")
    assert ok


def test_c06_euler_cocycle(acceptance_log):
    rng = np.random.default_rng(106)
    values = {euler_cocycle(random_lift(rng), random_lift(rng)) for _ in range(1000)}
    bad_delta = 0
    for _ in range(1000):
        f, g, h = random_lift(rng), random_lift(rng), random_lift(rng)
        d = euler_cocycle(g, h) - euler_cocycle(f.compose(g), h) + euler_cocycle(f, g.compose(h)) - euler_cocycle(f, g)
        bad_delta += d != 0
    bad_inv = 0
    for _ in range(500):
        k, f, g, h = (random_lift(rng) for _ in range(4))
        bad_inv += homogeneous_euler(f, g, h) != homogeneous_euler(k.compose(f), k.compose(g), k.compose(h))
    ok = values <= {0, 1} and all(isinstance(v, int) for v in values) and bad_delta == 0 and bad_inv == 0
    acceptance_log(6, "Euler cocycle", ok,
                   f"values {sorted(values)}, delta failures {bad_delta}, invariance failures {bad_inv}")
    assert ok


def test_c07_rotation_numbers(acceptance_log, rep2):
    rigid = translation_number(RigidRotation(1 / 3), 300_000)
    iters = 1_000_000
    hyper = [fixed_point_lift(g) for g in rep2.generators]
    hyper += [word_lift(rep2, rep2.word(t)) for t in ("a1 b1", "a2 b2^-1 a1", "b1 b1 a2^-1")]
    worst = max(abs(translation_number(f, iters)) for f in hyper)
    w = non_additivity_witness(rep2, max_length=4, iters=iters)
    checks = {
        "rigid 1/3 exact": rigid == 1 / 3,
        "hyperbolic |tau| <= 1/iters": worst <= 1 / iters,
        "Rot(a), Rot(b) = 0 +- 1e-6": abs(w.rot_a) <= 1e-6 and abs(w.rot_b) <= 1e-6,
        "gap > 0.01": w.gap > 0.01,
    }
    # the product must be elliptic, and its rotation number must match the
    # angle read off from arccos(tr/2); search words up to length 4
    tr = rep2.evaluate_mat2(w.a * w.b).trace.real
    elliptic = abs(tr) < 2
    if elliptic:
        oracle = elliptic_rotation_oracle(rep2.evaluate_mat2(w.a * w.b))
        match = abs((w.rot_ab - oracle + 0.5) % 1.0 - 0.5) < 1e-4
    else:
        try:
            elliptic_product_search(rep2, max_length=4)
            match = False
        except WitnessSearchError as exc:
            tr = exc.min_trace
            match = False
    checks["product elliptic, gap matches trace-angle oracle within 1e-4"] = elliptic and match
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    acceptance_log(7, "rotation numbers", ok,
                   f"witness a = {rep2.format(w.a)}, b = {rep2.format(w.b)}, gap {w.gap:.6f}, "
                   f"hyperbolic max |tau| {worst:.1e}; |tr(ab)| min {abs(tr):.4f}"
                   + (f"; failed: {failed}" if failed else ""))
    assert ok, failed


def test_c08_gamma_cocycle(acceptance_log, fingers):
    rng = np.random.default_rng(108)
    pts, _ = sample_points(108, 500)
    t0 = time.perf_counter()
    bad = 0
    for x in pts:
        w1, w2 = f_word(rng, 6), f_word(rng, 6)
        q, _ = rho_apply_many(fingers, w1, x[None])
        lhs = gamma(fingers, w1 * w2, x)
        rhs = gamma(fingers, w1, x) * gamma(fingers, w2, q[0])
        bad += lhs != rhs
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 60
    acceptance_log(8, "gamma cocycle identity", ok, f"{bad} mismatches in 500, {dt:.1f} s")
    assert ok


def test_c09_region_table(acceptance_log, fingers):
    rng = np.random.default_rng(109)
    pts, _ = sample_points(109, 10_000)
    m = region_masks(fingers, pts)
    outside = ~(m["tube"][0] | m["tube"][1])
    core = m["ball"] & ~outside
    mism = 0
    for _ in range(10):
        w = random_word_on(rng, F_LETTERS, int(rng.integers(1, 7)))
        gs = gamma_many(fingers, w, pts)
        mism += sum(gs[i] != Word(()) for i in np.nonzero(outside)[0])
        mism += sum(gs[i] != w for i in np.nonzero(core)[0])
    ok = mism == 0
    acceptance_log(9, "region / table agreement", ok,
                   f"{mism} mismatches; {int(outside.sum())} Outside, {int(core.sum())} Core samples")
    assert ok


def test_c10_dirac(acceptance_log, fingers):
    rng = np.random.default_rng(110)
    bad = 0
    for _ in range(100):
        w = random_word_on(rng, F_LETTERS, int(rng.integers(0, 11)))
        bad += gamma(fingers, w, np.zeros(2)) != w
    ok = bad == 0
    acceptance_log(10, "Dirac check at the basepoint", ok, f"{bad} mismatches in 100")
    assert ok


def random_triples(seed, n=20, max_len=6):
    rng = np.random.default_rng(seed)
    return [tuple(f_word(rng, max_len) for _ in range(3)) for _ in range(n)]


def test_c11_inequality_volume(acceptance_log, fingers, rep2):
    t0 = time.perf_counter()
    c = volume_handle(rep2)
    tuples = random_triples(111)
    rep = inequality_report(fingers, c, tuples, 100_000, 0)
    fine = build_finger_system(eta=fingers.eta / 2, widths=tuple(t.width / 2 for t in fingers.tubes), r_B=fingers.r_B)
    rep_fine = inequality_report(fine, c, tuples[:1], 100_000, 0)
    env, env_fine = rep["envelope"], rep_fine["envelope"]
    se = c.bound * math.hypot(math.hypot(rep["stderr_supports"], rep["stderr_E"]),
                              math.hypot(rep_fine["stderr_supports"], rep_fine["stderr_E"]))
    shrinks = env_fine < env + 3 * se and env_fine < env
    dt = time.perf_counter() - t0
    worst = max(r["lhs"] - r["rhs"] for r in rep["rows"])
    ok = rep["all_pass"] and shrinks and dt < 600
    acceptance_log(11, "inequality, volume cocycle", ok,
                   f"{sum(r['pass'] for r in rep['rows'])}/20 tuples, max lhs - rhs {worst:.3f}, "
                   f"envelope {env:.4f} -> {env_fine:.4f} after halving, {dt:.0f} s")
    assert ok


def test_c12_inequality_euler(acceptance_log, fingers, rep2):
    c = euler_handle(rep2)
    rep = inequality_report(fingers, c, random_triples(112), 100_000, 0)
    worst = max(r["lhs"] - r["rhs"] for r in rep["rows"])
    ok = rep["all_pass"]
    acceptance_log(12, "inequality, homogeneous Euler cocycle", ok,
                   f"{sum(r['pass'] for r in rep['rows'])}/20 tuples, max lhs - rhs {worst:.3f}")
    assert ok


def test_c13_schottky(acceptance_log, schottky):
    tol = 1e-8
    pp = ping_pong_check(schottky, schottky_disks())
    e, a, b = Word(()), Word([1]), Word([2])
    v = volume_cocycle(schottky, [e, a, b, a * b], tol=tol)
    rng = np.random.default_rng(113)
    worst = 0.0
    for _ in range(50):
        ws = [random_word_on(rng, [1, -1, 2, -2], int(rng.integers(0, 3))) for _ in range(5)]
        parts = [volume_cocycle(schottky, ws[:j] + ws[j + 1:], tol=tol) for j in range(5)]
        worst = max(worst, abs(sum((-1) ** j * x for j, x in enumerate(parts))))
    ok = pp and math.isfinite(v) and abs(v) < 1.01495 and worst < 5 * tol
    acceptance_log(13, "Schottky group in dimension 3", ok,
                   f"ping-pong {pp}, v(e,a,b,ab) = {v}, max residual {worst:.1e}")
    assert ok


ACCEPTANCE_RUNS = [
    ["cocycle-check", "--dim", "2", "--trials", "200"],
    ["cocycle-check", "--dim", "3", "--trials", "20"],
    ["euler-eval", "--trials", "1000"],
    ["rotation-number", "--iters", "300000"],
    ["witness"],
    ["build-surface"],
    ["sample-area", "--n", "1000000"],
    ["fan-pairing"],
    ["gamma-eval", "--word", "a1 a2 a1^-1", "--point", "0.05,0.02"],
    ["gamma-b", "--n-samples", "100000"],
    ["inequality", "--n-samples", "100000"],
    ["inequality", "--cocycle", "euler", "--n-samples", "100000"],
    ["dirac-check", "--trials", "100"],
    ["schottky-check"],
]


def test_c14_reproducibility(acceptance_log):
    differ = []
    for argv in ACCEPTANCE_RUNS:
        outs = [subprocess.run([sys.executable, "-m", "hypcocycles.cli", *argv, "--seed", "7"],
                               capture_output=True).stdout for _ in range(2)]
        if outs[0] != outs[1] or not outs[0]:
            differ.append(" ".join(argv))
    ok = not differ
    acceptance_log(14, "byte-identical CLI reruns", ok,
                   f"{len(ACCEPTANCE_RUNS) - len(differ)}/{len(ACCEPTANCE_RUNS)} runs identical"
                   + (f"; differ: {differ}" if differ else ""))
    assert ok
