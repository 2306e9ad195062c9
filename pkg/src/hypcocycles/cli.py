"""Command-line front end.  Every subcommand prints JSON lines.

Exit codes: 0 success, 1 a check ran and failed, 2 invalid input or
configuration, 3 a numerical budget was exhausted.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys

import numpy as np

DEFAULTS = {
    "eta": 0.25,
    "widths": [0.08, 0.08],
    "r_B": 0.2,
    "n_samples": 100000,
    "tol": 1e-8,
    "seed": 0,
    "iters": 100000,
    "trials": 200,
    "max_length": 6,
    "tuples": 20,
    "out": None,
}

POSITIVE = ("eta", "r_B", "n_samples", "tol", "iters", "trials", "max_length", "tuples")


class ValidationError(ValueError):
    pass


class CheckFailed(Exception):
    pass


def load_config(path=None, overrides=(), flags=None):
    cfg = dict(DEFAULTS)
    if path:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
        unknown = set(user) - set(DEFAULTS)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(user)
    for item in overrides:
        if "=" not in item:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        if k not in DEFAULTS:
            raise ValidationError(f"unknown config key {k!r}")
        try:
            cfg[k] = json.loads(v)
        except json.JSONDecodeError:
            cfg[k] = v
    for k, v in (flags or {}).items():
        if v is not None:
            cfg[k] = v
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    for k in POSITIVE:
        v = cfg[k]
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
            raise ValidationError(f"{k} must be a positive number, got {v!r}")
    if not 0 < cfg["eta"] < 1:
        raise ValidationError("eta must lie in (0, 1)")
    w = cfg["widths"]
    if not (isinstance(w, list) and len(w) == 2 and all(isinstance(x, (int, float)) and x > 0 for x in w)):
        raise ValidationError("widths must be a list of two positive numbers")
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ValidationError("seed must be a nonnegative integer")
    for k in ("n_samples", "iters", "trials", "max_length", "tuples"):
        if int(cfg[k]) != cfg[k]:
            raise ValidationError(f"{k} must be an integer")
        cfg[k] = int(cfg[k])


def config_hash(cfg):
    body = {k: v for k, v in cfg.items() if k != "out"}
    return hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# helpers


def _rep2():
    from .group_words import genus2_standard_rep

    return genus2_standard_rep()


def _words(rep, text):
    return [rep.word(t) for t in text.split(";")]


def _point(text, dim=2):
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise ValidationError(f"bad point {text!r}") from exc
    if len(vals) != dim:
        raise ValidationError(f"point needs {dim} coordinates")
    return np.array(vals)


def _random_klein(rng, dim, rmax=0.95):
    while True:
        x = rng.uniform(-rmax, rmax, size=dim)
        if x @ x < rmax * rmax:
            return x


def _random_word(rng, letters, length):
    from .group_words import Word

    out = []
    while len(out) < length:
        x = int(rng.choice(letters))
        if out and out[-1] == -x:
            continue
        out.append(x)
    return Word(out)


def _finger(cfg):
    from .finger_push import build_finger_system

    return build_finger_system(cfg["eta"], tuple(cfg["widths"]), cfg["r_B"])


def _cocycle(name, rep, cfg):
    from .finger_push import euler_handle, volume_handle, zero_handle

    if name == "volume":
        return volume_handle(rep, tol=cfg["tol"])
    if name == "euler":
        return euler_handle(rep)
    if name == "zero":
        return zero_handle()
    raise ValidationError(f"unknown cocycle {name!r}")


# ---------------------------------------------------------------------------
# subcommands; each returns a list of records


def cmd_volume_eval(a, cfg):
    from .group_words import schottky_rank2, volume_cocycle
    from .hyp_core import KleinPoint

    rep = _rep2() if a.dim == 2 else schottky_rank2()
    ws = _words(rep, a.words)
    base = KleinPoint(_point(a.base, a.dim)) if a.base else None
    v = volume_cocycle(rep, ws, base, cfg["tol"])
    return [{"words": [rep.format(w) for w in ws], "dim": a.dim, "volume": v}]


def cmd_cocycle_check(a, cfg):
    from .simplex_volume import coboundary_residual

    rng = np.random.default_rng(cfg["seed"])
    worst = 0.0
    for _ in range(cfg["trials"]):
        pts = [_random_klein(rng, a.dim) for _ in range(a.dim + 2)]
        worst = max(worst, coboundary_residual(pts, a.dim, cfg["tol"]))
    limit = 1e-9 if a.dim == 2 else 5 * cfg["tol"]
    return [{"dim": a.dim, "trials": cfg["trials"], "max_residual": worst, "limit": limit, "pass": worst < limit}]


def _random_lift(rng):
    from .circle_dynamics import MobiusLift, RigidRotation
    from . import hyp_core as hc

    if rng.random() < 0.3:
        return RigidRotation(float(rng.uniform(-2, 2)))
    g = hc.compose(hc.rotation(float(rng.uniform(0, 2 * math.pi))),
                   hc.translation(float(rng.uniform(0, 2 * math.pi)), float(rng.uniform(0, 3))))
    return MobiusLift.from_isometry(g).shifted(int(rng.integers(-2, 3)))


def cmd_euler_eval(a, cfg):
    from .circle_dynamics import euler_cocycle, homogeneous_euler

    rng = np.random.default_rng(cfg["seed"])
    n = cfg["trials"]
    values = set()
    bad_delta = 0
    for _ in range(n):
        f, g, h = (_random_lift(rng) for _ in range(3))
        values.add(euler_cocycle(f, g))
        d = euler_cocycle(g, h) - euler_cocycle(f.compose(g), h) + euler_cocycle(f, g.compose(h)) - euler_cocycle(f, g)
        bad_delta += d != 0
    bad_inv = 0
    for _ in range(n):
        k, f, g, h = (_random_lift(rng) for _ in range(4))
        bad_inv += homogeneous_euler(f, g, h) != homogeneous_euler(k.compose(f), k.compose(g), k.compose(h))
    ok = values <= {0, 1} and bad_delta == 0 and bad_inv == 0
    return [{"trials": n, "values": sorted(values), "delta_failures": int(bad_delta),
             "invariance_failures": int(bad_inv), "pass": bool(ok)}]


def cmd_rotation_number(a, cfg):
    from .circle_dynamics import RigidRotation, translation_number, word_lift

    iters = cfg["iters"]
    if a.word is not None:
        rep = _rep2()
        w = rep.word(a.word)
        f = word_lift(rep, w)
        return [{"word": rep.format(w), "iters": iters, "rotation_number": translation_number(f, iters)}]
    f = RigidRotation(a.rotation)
    return [{"rotation": a.rotation, "iters": iters, "rotation_number": translation_number(f, iters)}]


def cmd_defect_scan(a, cfg):
    from .circle_dynamics import defect_scan, word_rotation_quasimorphism

    rep = _rep2()
    rng = np.random.default_rng(cfg["seed"])
    q = word_rotation_quasimorphism(rep, cfg["iters"])
    letters = [1, -1, 2, -2, 3, -3, 4, -4]
    pairs = [(_random_word(rng, letters, int(rng.integers(1, cfg["max_length"] + 1))),
              _random_word(rng, letters, int(rng.integers(1, cfg["max_length"] + 1))))
             for _ in range(cfg["trials"])]
    d = defect_scan(q, pairs)
    bound = 1 + 3 / cfg["iters"]
    return [{"pairs": len(pairs), "defect_lower_bound": d, "defect_bound": bound, "pass": d <= bound}]


def cmd_witness(a, cfg):
    from .circle_dynamics import WitnessSearchError, elliptic_product_search, non_additivity_witness

    rep = _rep2()
    w = non_additivity_witness(rep, max_length=a.max_length)
    rec = {"a": rep.format(w.a), "b": rep.format(w.b), "rot_a": w.rot_a, "rot_b": w.rot_b,
           "rot_ab": w.rot_ab, "gap": w.gap, "integer_gap": w.oracle_gap, "trace_ab": w.product_trace,
           "pass": w.gap > 0.01}
    try:
        ea, eb, tr = elliptic_product_search(rep, max_length=a.max_length)
        ell = {"elliptic_product": True, "a": rep.format(ea), "b": rep.format(eb), "trace": tr, "pass": True}
    except WitnessSearchError as exc:
        ell = {"elliptic_product": False, "min_abs_trace": exc.min_trace, "pass": False}
    return [rec, {"search": "elliptic-product", **ell}]


def cmd_build_surface(a, cfg):
    from .group_words import genus2_relator, projective_residual
    from .surface_model import build_octagon

    poly = build_octagon()
    rel = genus2_relator(poly.rep)
    rec = {
        "vertex_radius": poly.vertex_radius,
        "inradius": poly.inradius,
        "angle_sum_error": poly.angle_sum() - 2 * math.pi,
        "area": poly.area(),
        "pairing_residual": poly.pairing_residual(),
        "relator": poly.rep.format(rel),
        "relator_residual": projective_residual(poly.rep.evaluate_mat2(rel)),
        "polygon": json.loads(poly.to_json()),
    }
    rec["pass"] = abs(rec["angle_sum_error"]) < 1e-10 and rec["relator_residual"] < 1e-9
    return [rec]


def cmd_sample_area(a, cfg):
    from .surface_model import area_measure

    n = a.n if a.n is not None else cfg["n_samples"]
    if n < 1:
        raise ValidationError("sample count must be >= 1")
    est = area_measure(lambda p: np.ones(len(p), dtype=bool), n, cfg["seed"])
    z = (est.value - 4 * math.pi) / est.stderr
    return [{**est.as_dict(), "truth": 4 * math.pi, "z": z, "pass": abs(z) <= 3 and est.stderr < 0.02}]


def cmd_gamma_eval(a, cfg):
    from .finger_push import gamma, region_classify
    from .surface_model import canonicalize

    sys_ = _finger(cfg)
    rep = sys_.polygon.rep
    w = rep.word(a.word)
    p, deck = canonicalize(_point(a.point))
    g = gamma(sys_, w, p)
    return [{"gamma": rep.format(g), "word": rep.format(w), "point": p.model_coords.tolist(),
             "region": str(region_classify(sys_, p))}]


def cmd_gamma_b(a, cfg):
    from .finger_push import gamma_b_estimate

    sys_ = _finger(cfg)
    rep = sys_.polygon.rep
    c = _cocycle(a.cocycle, rep, cfg)
    ws = _words(rep, a.words)
    est = gamma_b_estimate(sys_, c, ws, cfg["n_samples"], cfg["seed"])
    return [{"cocycle": c.name, "words": [rep.format(w) for w in ws], **est.as_dict()}]


def _random_tuples(cfg):
    rng = np.random.default_rng(cfg["seed"] + 1)
    from .finger_push import TUBE_LETTERS

    letters = [x for t in TUBE_LETTERS for x in (t, -t)]
    return [[_random_word(rng, letters, int(rng.integers(0, cfg["max_length"] + 1))) for _ in range(3)]
            for _ in range(cfg["tuples"])]


def cmd_inequality(a, cfg):
    from .finger_push import inequality_report

    sys_ = _finger(cfg)
    rep = sys_.polygon.rep
    c = _cocycle(a.cocycle, rep, cfg)
    rep_ = inequality_report(sys_, c, _random_tuples(cfg), cfg["n_samples"], cfg["seed"])
    rows = rep_.pop("rows")
    out = [{"row": i, **r} for i, r in enumerate(rows)]
    out.append({"summary": True, **rep_, "pass": rep_["all_pass"]})
    return out


def cmd_fan_pairing(a, cfg):
    from .pairing import positivity_certificate

    rep = _rep2()
    cert = positivity_certificate(rep, a.word)
    if a.word is None:
        cert["gauss_bonnet_error"] = abs(abs(cert["pairing"]) - 4 * math.pi)
    return [cert]


def cmd_dirac_check(a, cfg):
    from .finger_push import TUBE_LETTERS, gamma

    sys_ = _finger(cfg)
    rep = sys_.polygon.rep
    rng = np.random.default_rng(cfg["seed"])
    letters = [x for t in TUBE_LETTERS for x in (t, -t)]
    bad = []
    n = cfg["trials"]
    for _ in range(n):
        w = _random_word(rng, letters, int(rng.integers(0, 11)))
        g = gamma(sys_, w, np.zeros(2))
        if g != w:
            bad.append([rep.format(w), rep.format(g)])
    return [{"trials": n, "mismatches": len(bad), "examples": bad[:5], "pass": not bad}]


def cmd_schottky_check(a, cfg):
    from .group_words import Word, ping_pong_check, schottky_disks, schottky_rank2, volume_cocycle

    rep = schottky_rank2()
    tol = cfg["tol"]
    pp = ping_pong_check(rep, schottky_disks())
    e, ga, gb = Word(()), Word((1,)), Word((2,))
    v = volume_cocycle(rep, [e, ga, gb, ga * gb], tol=tol)
    rng = np.random.default_rng(cfg["seed"])
    worst = 0.0
    n = a.trials if a.trials is not None else 50
    for _ in range(n):
        ws = [_random_word(rng, [1, -1, 2, -2], int(rng.integers(0, 3))) for _ in range(5)]
        parts = [volume_cocycle(rep, ws[:j] + ws[j + 1:], tol=tol) for j in range(5)]
        worst = max(worst, abs(sum((-1) ** j * x for j, x in enumerate(parts))))
    ok = pp and abs(v) < 1.01495 and worst < 5 * tol
    return [{"ping_pong": pp, "volume_e_a_b_ab": v, "tuples": n, "max_residual": worst,
             "limit": 5 * tol, "pass": bool(ok)}]


COMMANDS = {
    "volume-eval": cmd_volume_eval,
    "cocycle-check": cmd_cocycle_check,
    "euler-eval": cmd_euler_eval,
    "rotation-number": cmd_rotation_number,
    "defect-scan": cmd_defect_scan,
    "witness": cmd_witness,
    "build-surface": cmd_build_surface,
    "sample-area": cmd_sample_area,
    "gamma-eval": cmd_gamma_eval,
    "gamma-b": cmd_gamma_b,
    "inequality": cmd_inequality,
    "fan-pairing": cmd_fan_pairing,
    "dirac-check": cmd_dirac_check,
    "schottky-check": cmd_schottky_check,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--n-samples", type=int, dest="n_samples")
    common.add_argument("--tol", type=float)
    common.add_argument("--out", help="write JSON lines here instead of stdout")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides")
    common.add_argument("--trials", type=int)
    common.add_argument("--iters", type=int)

    p = argparse.ArgumentParser(prog="hypcocycles", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("volume-eval", parents=[common])
    s.add_argument("--dim", type=int, choices=(2, 3), default=2)
    s.add_argument("--words", default="e;a1;b1", help="semicolon-separated words")
    s.add_argument("--base")
    s = sub.add_parser("cocycle-check", parents=[common])
    s.add_argument("--dim", type=int, choices=(2, 3), default=2)
    sub.add_parser("euler-eval", parents=[common])
    s = sub.add_parser("rotation-number", parents=[common])
    s.add_argument("--rotation", type=float, default=1 / 3)
    s.add_argument("--word")
    s = sub.add_parser("defect-scan", parents=[common])
    s.add_argument("--max-length", type=int, dest="max_length")
    s = sub.add_parser("witness", parents=[common])
    s.add_argument("--max-length", type=int, default=4, dest="max_length")
    sub.add_parser("build-surface", parents=[common])
    s = sub.add_parser("sample-area", parents=[common])
    s.add_argument("--n", type=int)
    s = sub.add_parser("gamma-eval", parents=[common])
    s.add_argument("--word", required=True)
    s.add_argument("--point", default="0,0")
    s = sub.add_parser("gamma-b", parents=[common])
    s.add_argument("--cocycle", default="volume")
    s.add_argument("--words", default="e;a1;a2")
    s = sub.add_parser("inequality", parents=[common])
    s.add_argument("--cocycle", default="volume")
    s.add_argument("--tuples", type=int)
    s.add_argument("--max-length", type=int, dest="max_length")
    s = sub.add_parser("fan-pairing", parents=[common])
    s.add_argument("--word")
    sub.add_parser("dirac-check", parents=[common])
    sub.add_parser("schottky-check", parents=[common])
    return p


def _emit(records, cfg, command, out):
    h = config_hash(cfg)
    lines = []
    for r in records:
        rec = {"command": command, "seed": cfg["seed"], "config_hash": h, **r}
        lines.append(json.dumps(rec, sort_keys=True, default=_json_default))
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def main(argv=None):
    from .finger_push import SampleFailure
    from .simplex_volume import QuadratureError
    from .surface_model import CanonicalizeError

    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    flags = {k: getattr(a, k, None) for k in ("seed", "n_samples", "tol", "trials", "iters", "out")}
    for k in ("tuples", "max_length"):
        if a.command in ("inequality", "defect-scan") and getattr(a, k, None) is not None:
            flags[k] = getattr(a, k)
    try:
        cfg = load_config(a.config, a.overrides, flags)
        records = COMMANDS[a.command](a, cfg)
    except QuadratureError as exc:
        err = {"command": a.command, "error": "quadrature", "message": str(exc), "partial_estimate": exc.estimate}
        sys.stderr.write(json.dumps(err) + "\n")
        return 3
    except (SampleFailure, CanonicalizeError, ArithmeticError) as exc:
        err = {"command": a.command, "error": "numerical", "message": str(exc)}
        sys.stderr.write(json.dumps(err) + "\n")
        return 3
    except (ValidationError, ValueError) as exc:
        sys.stderr.write(json.dumps({"command": a.command, "error": "validation", "message": str(exc)}) + "\n")
        return 2
    _emit(records, cfg, a.command, cfg["out"])
    return 1 if any(r.get("pass") is False for r in records) else 0


if __name__ == "__main__":
    sys.exit(main())
