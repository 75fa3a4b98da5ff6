"""Command line front end.

Each subcommand resolves its flags (optionally seeded from a key = value
config file) into a full parameter set, runs the corresponding library
call, and appends a RunRecord to the result store.  Identical configs
hash identically, so reruns are checked against the stored payload
instead of duplicating it.

Exit codes: 0 success, 1 invariant violation or determinism conflict,
2 usage error, 3 resource cap exceeded.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import re
import sys

import numpy as np

from . import __version__, estimators, freegroup, lamplighter
from .errors import DEFAULT_CAPS, Caps, DomainError, ResourceCapError
from .groups import (IteratedWreathZ, Free, WreathZ2OverF, WreathZOverF, Zd,
                     format_element, validate)
from .records import (RunConfig, RunRecord, Store, StoreConflictError,
                      StoreLockedError, write_csv)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_CAP = 3

_CAP_NAMES = tuple(f.name for f in dataclasses.fields(Caps))


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parameter schemas: name -> (parser, default); None default means the
# flag may stay unset, _REQUIRED means the command refuses to run
# without it.

_REQUIRED = object()


def _flag_int(x):
    return int(x)


def _flag_float(x):
    return float(x)


def _flag_str(x):
    return str(x)


def _flag_bool(x):
    if isinstance(x, bool):
        return x
    if str(x).lower() in ("1", "true", "yes"):
        return True
    if str(x).lower() in ("0", "false", "no"):
        return False
    raise UsageError(f"expected a boolean, got {x!r}")


def _flag_int_list(x):
    if isinstance(x, (list, tuple)):
        return [int(v) for v in x]
    return [int(tok) for tok in str(x).split(",") if tok.strip()]


def _flag_str_list(x):
    if isinstance(x, (list, tuple)):
        return [str(v) for v in x]
    return [str(x)]


_SCHEMAS = {
    "exact-lamplighter": {
        "lamp_order": (_flag_int, _REQUIRED),
        "n": (_flag_int, _REQUIRED),
        "mode": (_flag_str, "rational"),
        "check_invariance": (_flag_bool, False),
        "entropy_tv_max": (_flag_int, None),
        "radius_eps": (_flag_float, None),
        "constancy_eps": (_flag_float, None),
        "samples": (_flag_int, 4096),
        "seed": (_flag_int, 0),
        "caps": (dict, None),
    },
    "free": {
        "rank": (_flag_int, _REQUIRED),
        "n": (_flag_int, _REQUIRED),
        "mode": (_flag_str, "float"),
        "word": (_flag_str, None),
        "cancel_k": (_flag_int, None),
        "caps": (dict, None),
    },
    "drift": {
        "group": (_flag_str, None),
        "inner": (_flag_int, None),
        "grid": (_flag_int_list, None),
        "samples": (_flag_int, 10000),
        "seed": (_flag_int, 0),
        "caps": (dict, None),
    },
    "cover": {
        "grid": (_flag_int_list, _REQUIRED),
        "samples": (_flag_int, 64),
        "seed": (_flag_int, 0),
        "caps": (dict, None),
    },
    "invariance": {
        "lamp_order": (_flag_int, _REQUIRED),
        "n": (_flag_int, _REQUIRED),
        "g_base": (_flag_str, "0,0"),
        "g_lamp": (_flag_str_list, None),
        "samples": (_flag_int, 1024),
        "seed": (_flag_int, 0),
        "caps": (dict, None),
    },
    "report": {},
}


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="lampwalk",
        description="transition probabilities of walks on wreath products, "
                    "free groups and lattices")
    top.add_argument("--version", action="version",
                     version=f"lampwalk {__version__}")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="FILE",
                       help="key = value file supplying defaults for this "
                            "command; explicit flags win")
        p.add_argument("--store", metavar="DIR",
                       help="result store directory (default: "
                            "$LAMPWALK_STORE or ./lampwalk-store)")
        p.add_argument("--csv", metavar="FILE",
                       help="export the metric table as CSV")
        p.add_argument("--json", action="store_true", dest="json_out",
                       help="print the full record as JSON")
        p.add_argument("--cap", action="append", default=None,
                       metavar="NAME=VALUE",
                       help="override a resource cap (repeatable)")

    p = sub.add_parser("exact-lamplighter",
                       help="exact n-step law on the lamplighter Z wr Z/F")
    p.add_argument("--lamp-order", type=int, dest="lamp_order")
    p.add_argument("--n", type=int)
    p.add_argument("--mode", choices=("rational", "float"))
    p.add_argument("--check-invariance", action="store_const", const=True,
                   default=None, dest="check_invariance",
                   help="verify lamp-class invariance identities and fail "
                        "on any violation")
    p.add_argument("--entropy-tv-max", type=int, dest="entropy_tv_max",
                   metavar="N",
                   help="also tabulate entropy and shift TV for n up to N")
    p.add_argument("--radius-eps", type=float, dest="radius_eps",
                   help="profile the almost-invariance radius at this eps "
                        "(float mode)")
    p.add_argument("--constancy-eps", type=float, dest="constancy_eps",
                   help="profile the almost-constancy radius at this eps")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    common(p)

    p = sub.add_parser("free", help="word-length law on the free group F_m")
    p.add_argument("--rank", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--mode", choices=("rational", "float"))
    p.add_argument("--word", help="reduced word like 'x1 X2 x1' "
                                  "(capital letter = inverse)")
    p.add_argument("--cancel-k", type=int, dest="cancel_k",
                   help="tail probability that at least k letters of --word "
                        "cancel against the walk")
    common(p)

    p = sub.add_parser("drift", help="Monte Carlo drift curve and power fit")
    p.add_argument("--group",
                   help="z, z2, f<m>, zwr<F>, zwrz, iterz<d>, z2wrf<F>")
    p.add_argument("--inner", type=int, choices=(1, 2),
                   help="inner value drift at nesting depth j instead of a "
                        "group drift curve")
    p.add_argument("--grid", help="comma list of step counts "
                                  "(default: powers of two)")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    common(p)

    p = sub.add_parser("cover",
                       help="radius of the ball covered by a planar walk")
    p.add_argument("--grid", help="comma list of step counts")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    common(p)

    p = sub.add_parser("invariance",
                       help="TV bounds for a shift on Z^2-based lamplighters")
    p.add_argument("--lamp-order", type=int, dest="lamp_order")
    p.add_argument("--n", type=int)
    p.add_argument("--g-base", dest="g_base", metavar="X,Y",
                   help="base translation of the increment (default 0,0)")
    p.add_argument("--g-lamp", dest="g_lamp", action="append",
                   metavar="X,Y:V", help="lamp of the increment (repeatable)")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    common(p)

    p = sub.add_parser("report", help="summarize every stored run")
    common(p)
    return top


# ---------------------------------------------------------------------------
# config resolution


def _resolve_params(command: str, args: argparse.Namespace) -> dict:
    schema = _SCHEMAS[command]
    resolved = {k: d for k, (_, d) in schema.items() if d is not _REQUIRED}
    missing_ok = {k for k, (_, d) in schema.items() if d is _REQUIRED}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = RunConfig.from_text(fh.read(), command=command)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}")
        except ValueError as exc:
            raise UsageError(f"bad config file: {exc}")
        if file_cfg.command != command:
            raise UsageError(f"config file is for command "
                             f"{file_cfg.command!r}, not {command!r}")
        unknown = sorted(set(file_cfg.params) - set(schema))
        if unknown:
            raise UsageError("unknown config keys: " + ", ".join(unknown))
        resolved.update(file_cfg.params)
    for key in schema:
        val = getattr(args, key, None)
        if val is not None:
            resolved[key] = val
    caps_over = dict(resolved.get("caps") or {})
    for item in getattr(args, "cap", None) or []:
        name, _, val = str(item).partition("=")
        if not val:
            raise UsageError(f"--cap wants NAME=VALUE, got {item!r}")
        caps_over[name.strip()] = int(val)
    if caps_over:
        resolved["caps"] = caps_over
    out = {}
    for key, raw in resolved.items():
        if raw is None:
            out[key] = None
            continue
        conv = schema[key][0]
        try:
            out[key] = conv(raw) if conv is not dict else dict(raw)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {key}: {exc}")
    for key in missing_ok:
        if out.get(key) is None:
            raise UsageError("missing required option --"
                             + key.replace("_", "-"))
    return out


def _build_caps(params: dict) -> Caps:
    over = params.get("caps") or {}
    unknown = sorted(set(over) - set(_CAP_NAMES))
    if unknown:
        raise UsageError("unknown caps: " + ", ".join(unknown))
    if not over:
        return DEFAULT_CAPS
    return dataclasses.replace(DEFAULT_CAPS,
                               **{k: int(v) for k, v in over.items()})


# ---------------------------------------------------------------------------
# element and group parsing


def _parse_free_word(rank: int, text: str) -> tuple:
    if text.strip() in ("", "e"):
        return ()
    out = []
    for tok in text.split():
        m = re.fullmatch(r"([xX])(\d+)", tok)
        if not m:
            raise UsageError(f"bad generator token {tok!r}")
        i = int(m.group(2))
        if not 1 <= i <= rank:
            raise UsageError(f"generator index {i} out of range 1..{rank}")
        out.append(i if m.group(1) == "x" else -i)
    word = tuple(out)
    validate(Free(rank), word)
    return word


def _parse_pair(text: str) -> tuple:
    parts = str(text).split(",")
    if len(parts) != 2:
        raise UsageError(f"expected X,Y, got {text!r}")
    return (int(parts[0]), int(parts[1]))


def _parse_plane_element(lamp_order: int, base_text: str, lamp_texts) -> tuple:
    base = _parse_pair(base_text)
    lamps = []
    for item in lamp_texts or []:
        site_text, sep, val = str(item).partition(":")
        if not sep:
            raise UsageError(f"expected X,Y:V, got {item!r}")
        lamps.append((_parse_pair(site_text), int(val) % lamp_order))
    lamps = tuple(sorted((s, v) for s, v in lamps if v))
    g = (base, lamps)
    validate(WreathZ2OverF(lamp_order), g)
    return g


_GROUP_FORMS = (
    (r"z", lambda m: Zd(1)),
    (r"z2", lambda m: Zd(2)),
    (r"f(\d+)", lambda m: Free(int(m.group(1)))),
    (r"zwr(\d+)", lambda m: WreathZOverF(int(m.group(1)))),
    (r"zwrz", lambda m: IteratedWreathZ(1)),
    (r"iterz(\d+)", lambda m: IteratedWreathZ(int(m.group(1)))),
    (r"z2wrf(\d+)", lambda m: WreathZ2OverF(int(m.group(1)))),
)


def _parse_group(name: str):
    for pattern, build in _GROUP_FORMS:
        m = re.fullmatch(pattern, name.strip())
        if m:
            return build(m)
    raise UsageError(f"unknown group {name!r}; try z, z2, f2, zwr2, zwrz, "
                     f"iterz2 or z2wrf2")


# ---------------------------------------------------------------------------
# subcommand bodies; each fills the record and returns an exit code


def _run_exact_lamplighter(params: dict, caps: Caps, rec: RunRecord) -> int:
    F = params["lamp_order"]
    n = params["n"]
    mode = params["mode"]
    cd = lamplighter.exact_distribution(F, n=n, mode=mode, caps=caps)
    rec.add("entropy", n, lamplighter.exact_entropy(cd), mode=mode)
    rec.add("total_mass", n, cd.total_mass(), mode=mode)
    rng = cd.endpoint_range()
    rec.extras["endpoint_range"] = [rng.start, rng.stop - 1] if len(rng) \
        else []
    if n == 0:
        rec.extras["point_mass"] = format_element(cd.desc, (0, ()))
    code = EXIT_OK

    if params["check_invariance"]:
        total_viol, total_checked, total_skipped = 0, 0, 0
        details = []
        for c in range(1, F):
            rep = lamplighter.check_exact_invariance(cd, (0, ((0, c),)))
            total_viol += len(rep.violations)
            total_checked += rep.checked
            total_skipped += rep.skipped
            for v in rep.violations[:3]:
                details.append({"increment": format_element(cd.desc,
                                                            (0, ((0, c),))),
                                "detail": repr(v)})
        rec.add("invariance_violations", n, total_viol, mode=mode)
        rec.extras["invariance"] = {"checked": total_checked,
                                    "skipped": total_skipped,
                                    "violations": details}
        if total_viol:
            rec.status = "violation"
            code = EXIT_VIOLATION

    if params["entropy_tv_max"] is not None:
        prof = lamplighter.entropy_tv_profile(F, n_max=params["entropy_tv_max"],
                                              caps=caps)
        # H carries one extra entry past n_max for forward differences
        h_ns = list(prof["n"]) + [prof["n"][-1] + 1]
        for k, h in zip(h_ns, prof["H"]):
            rec.add("entropy", k, h, mode="float")
        for g, curve in prof["tv"].items():
            label = format_element(WreathZOverF(F), g)
            for k, t in zip(prof["n"], curve):
                rec.add(f"tv_shift[{label}]", k, t, mode="float")

    if params["radius_eps"] is not None:
        fcd = cd if mode == "float" else lamplighter.exact_distribution(
            F, n=n, mode="float", caps=caps)
        prof = lamplighter.radius_profile(fcd, eps=params["radius_eps"],
                                          samples=params["samples"],
                                          seed=params["seed"])
        rec.add("invariance_radius", n, prof.radius, mode="mc")
        for l, q in zip(prof.lengths, prof.quantiles):
            rec.add("radius_quantile", l, q, mode="mc")
        rec.extras["radius_witnesses"] = [
            {"h": format_element(fcd.desc, w["h"]),
             "g": format_element(fcd.desc, w["g"]),
             "length": w["length"], "dev": w["dev"]}
            for w in prof.witnesses]
        rec.extras["radius_truncated"] = prof.truncated

    if params["constancy_eps"] is not None:
        prof = lamplighter.almost_constancy_profile(
            cd, eps=params["constancy_eps"])
        rec.add("constancy_radius", n, prof.cutoff, mode=mode)
        for l, lo, hi in zip(prof.lengths, prof.min_ratio, prof.max_ratio):
            rec.add("constancy_ratio_min", l, lo, mode=mode)
            rec.add("constancy_ratio_max", l, hi, mode=mode)
        if prof.first_violation is not None:
            rec.extras["constancy_first_violation"] = {
                str(k): _fmt_maybe_element(cd.desc, k, v)
                for k, v in prof.first_violation.items()}
        rec.extras["constancy_truncated"] = prof.truncated
    return code


def _fmt_maybe_element(desc, key, value):
    if key in ("element", "h", "g"):
        try:
            return format_element(desc, value)
        except (DomainError, TypeError):
            return repr(value)
    if isinstance(value, float):
        return value
    return repr(value) if not isinstance(value, (int, str)) else value


def _run_free(params: dict, caps: Caps, rec: RunRecord) -> int:
    m, n, mode = params["rank"], params["n"], params["mode"]
    caps.check("rational_steps" if mode == "rational" else "float_steps", n)
    # atom probability of one element at each distance, not sphere mass
    for l in range(n + 1):
        rec.add("point_prob", l, freegroup.free_point_probability(
            m, n, l, mode=mode), mode=mode)
    rec.add("return_prob", n, freegroup.free_point_probability(
        m, n, 0, mode=mode), mode=mode)
    if params["word"] is not None:
        word = _parse_free_word(m, params["word"])
        rec.extras["word"] = format_element(Free(m), word)
        if params["cancel_k"] is not None:
            k = params["cancel_k"]
            rec.add("cancellation_prob", k, freegroup.cancellation_probability(
                m, n, word, k, mode=mode), mode=mode)
            rec.add("cancellation_tail", k, freegroup.cancellation_tail(
                m, n, word, k, mode=mode), mode=mode)
    elif params["cancel_k"] is not None:
        raise UsageError("--cancel-k needs --word")
    return EXIT_OK


def _run_drift(params: dict, caps: Caps, rec: RunRecord) -> int:
    grid = tuple(params["grid"]) if params["grid"] else None
    if params["inner"] is not None:
        if params["group"] is not None:
            raise UsageError("--inner and --group are mutually exclusive")
        curve = estimators.inner_value_drift(
            params["inner"], n_grid=grid or estimators.DEFAULT_INNER_GRID,
            samples=params["samples"], seed=params["seed"], caps=caps)
        for i, k in enumerate(curve.n_grid):
            rec.add("inner_value_mean", k, curve.value_means[i],
                    stderr=curve.value_stderrs[i], mode="mc")
            rec.add("inner_visits_mean", k, curve.visits_means[i],
                    stderr=curve.visits_stderrs[i], mode="mc")
        for name, fit in (("inner_value", curve.value_fit),
                          ("inner_visits", curve.visits_fit)):
            rec.add(f"{name}_exponent", max(curve.n_grid), fit.exponent,
                    stderr=fit.stderr, mode="fit")
            rec.add(f"{name}_r2", max(curve.n_grid), fit.r_squared,
                    mode="fit")
            if fit.flagged:
                rec.status = "warning"
                rec.extras[f"{name}_fit_note"] = fit.note
        return EXIT_OK
    if params["group"] is None:
        raise UsageError("drift needs --group or --inner")
    desc = _parse_group(params["group"])
    curve = estimators.drift_curve(
        desc, n_grid=grid or estimators.DEFAULT_DRIFT_GRID,
        samples=params["samples"], seed=params["seed"], caps=caps)
    for i, k in enumerate(curve.n_grid):
        rec.add("drift_mean", k, curve.means[i], stderr=curve.stderrs[i],
                mode="mc")
    rec.add("drift_exponent", max(curve.n_grid), curve.fit.exponent,
            stderr=curve.fit.stderr, mode="fit")
    rec.add("drift_r2", max(curve.n_grid), curve.fit.r_squared, mode="fit")
    rec.extras["metric_kind"] = curve.metric
    if curve.fit.flagged:
        rec.status = "warning"
        rec.extras["fit_note"] = curve.fit.note
    return EXIT_OK


def _run_cover(params: dict, caps: Caps, rec: RunRecord) -> int:
    grid = tuple(params["grid"])
    radii = estimators.cover_radius_grid(grid, samples=params["samples"],
                                         seed=params["seed"], caps=caps)
    for j, k in enumerate(grid):
        col = radii[:, j]
        rec.add("cover_median", k, float(np.median(col)), mode="mc")
        for q in (0.1, 0.25, 0.75, 0.9):
            rec.add(f"cover_q{int(q * 100)}", k,
                    float(np.quantile(col, q)), mode="mc")
    return EXIT_OK


def _run_invariance(params: dict, caps: Caps, rec: RunRecord) -> int:
    F, n = params["lamp_order"], params["n"]
    g = _parse_plane_element(F, params["g_base"], params["g_lamp"])
    diag = estimators.z2f_invariance_bound(F, n, g,
                                           samples=params["samples"],
                                           seed=params["seed"], caps=caps)
    rec.add("invariance_upper", n, diag.upper, stderr=diag.upper_se,
            mode="mc")
    if diag.lower is not None:
        rec.add("invariance_lower", n, diag.lower, mode="exact")
    if isinstance(diag.event_fail, dict):
        for key, rate in diag.event_fail.items():
            rec.add(f"covering_event_fail[{key}]", n, rate, mode="mc")
    elif diag.event_fail is not None:
        rec.add("covering_event_fail", n, diag.event_fail, mode="mc")
    rec.extras["g"] = format_element(WreathZ2OverF(F), g)
    rec.extras["kind"] = diag.kind
    if diag.note:
        rec.extras["note"] = diag.note
    if diag.lower is not None and diag.lower > diag.upper + 1e-12:
        rec.status = "violation"
        return EXIT_VIOLATION
    return EXIT_OK


def _as_float(v):
    if isinstance(v, dict) and "__fraction__" in v:
        num, den = v["__fraction__"].split("/")
        return int(num) / int(den)
    return float(v)


def _checklist(by_metric: dict) -> list:
    """Claim checks computable from stored rows alone.

    Returns (verdict, text) pairs; verdict is pass, FAIL or n/a when the
    store holds no relevant rows.
    """

    def rows(name):
        return by_metric.get(name, [])

    def points(name):
        # last value wins per n so reruns do not double count
        seen = {}
        for r in rows(name):
            seen[r["n"]] = _as_float(r["value"])
        return sorted(seen.items())

    out = []

    viol = points("invariance_violations")
    if viol:
        bad = [n for n, v in viol if v != 0]
        out.append(("pass" if not bad else "FAIL",
                    f"exact invariance: zero violations at n = "
                    f"{[n for n, _ in viol]}"))
    else:
        out.append(("n/a", "exact invariance: zero violations"))

    rad = [(n, v) for n, v in points("invariance_radius") if n > 0]
    if len(rad) >= 2:
        cs = [v / math.sqrt(n) for n, v in rad]
        ok = min(cs) > 0 and max(cs) < 2 * min(cs)
        detail = ", ".join(f"c({n}) = {c:.3f}" for (n, _), c in zip(rad, cs))
        out.append(("pass" if ok else "FAIL",
                    f"invariance radius ~ c sqrt(n), c within 2x: {detail}"))
    else:
        out.append(("n/a", "invariance radius ~ c sqrt(n) (needs >= 2 n)"))

    cov = points("cover_median")
    if len(cov) >= 2:
        ok = all(b > a for (_, a), (_, b) in zip(cov, cov[1:]))
        out.append(("pass" if ok else "FAIL",
                    "cover radius median strictly increasing: "
                    + ", ".join(f"{v:g} @ {n}" for n, v in cov)))
    else:
        out.append(("n/a", "cover radius median strictly increasing"))

    ent = dict(points("entropy"))
    tv_names = [m for m in by_metric if m.startswith("tv_shift[")]
    ratios = []
    for name in tv_names:
        for n, t in points(name):
            if n in ent and (n + 1) in ent and ent[n + 1] > ent[n]:
                ratios.append(t / math.sqrt(ent[n + 1] - ent[n]))
    if ratios:
        ok = max(ratios) <= 20 * min(ratios) and min(ratios) > 0
        out.append(("pass" if ok else "FAIL",
                    f"tv / sqrt(dH) bounded: range [{min(ratios):.3f}, "
                    f"{max(ratios):.3f}]"))
    else:
        out.append(("n/a", "tv / sqrt(dH) bounded"))

    mono_bad, mono_seen = [], False
    for name in tv_names:
        pts = points(name)
        if len(pts) >= 2:
            mono_seen = True
            mono_bad += [name for (_, a), (_, b) in zip(pts, pts[1:])
                         if b > a + 1e-12]
    if mono_seen:
        out.append(("pass" if not mono_bad else "FAIL",
                    "shift TV non-increasing in n"))
    else:
        out.append(("n/a", "shift TV non-increasing in n"))

    alphas = [v for _, v in points("drift_exponent")]
    alphas += [v for _, v in points("inner_value_exponent")]
    if alphas:
        ok = all(0.0 < a <= 1.0 for a in alphas)
        out.append(("pass" if ok else "FAIL",
                    "drift exponents in (0, 1]: "
                    + ", ".join(f"{a:.3f}" for a in alphas)))
    else:
        out.append(("n/a", "drift exponents in (0, 1]"))

    lo = dict(points("invariance_lower"))
    hi = dict(points("invariance_upper"))
    both = sorted(set(lo) & set(hi))
    if both:
        ok = all(lo[n] <= hi[n] + 1e-9 for n in both)
        out.append(("pass" if ok else "FAIL",
                    "shift TV lower bound <= upper bound at n = "
                    f"{both}"))
    else:
        out.append(("n/a", "shift TV lower bound <= upper bound"))
    return out


def _run_report(args: argparse.Namespace) -> int:
    store = Store(args.store)
    recs = store.load_all()
    if not recs:
        print("status: warning (no stored runs)")
        print(",".join(("metric", "n", "value", "stderr", "mode")))
        if args.csv:
            empty = RunRecord(RunConfig("report", {}), __version__)
            write_csv(empty, args.csv)
        return EXIT_OK
    print(f"{len(recs)} stored run(s) in {store.path}")
    print(f"{'hash':<16}  {'command':<18}  {'status':<9}  rows")
    merged = RunRecord(RunConfig("report", {}), __version__)
    for r in recs:
        print(f"{r.config.config_hash():<16}  {r.config.command:<18}  "
              f"{r.status:<9}  {len(r.metrics)}")
        merged.metrics.extend(r.metrics)
    by_metric = {}
    for row in merged.metrics:
        by_metric.setdefault(row["metric"], []).append(row)
    print()
    print(f"{'metric':<28}  {'rows':>5}  {'n range':<15}  last value")
    for name in sorted(by_metric):
        rows = by_metric[name]
        ns = [r["n"] for r in rows if r["n"] is not None]
        span = f"{min(ns)}..{max(ns)}" if ns else "-"
        print(f"{name:<28}  {len(rows):>5}  {span:<15}  "
              f"{_short(rows[-1]['value'])}")
    print()
    print("claim checklist:")
    for verdict, text in _checklist(by_metric):
        print(f"  [{verdict:>4}] {text}")
    if args.csv:
        write_csv(merged, args.csv)
        print(f"csv -> {args.csv}")
    if args.json_out:
        print(json.dumps(merged.to_dict(), indent=1, sort_keys=True))
    return EXIT_OK


def _short(v) -> str:
    if isinstance(v, dict) and "__fraction__" in v:
        return v["__fraction__"]
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


_HANDLERS = {
    "exact-lamplighter": _run_exact_lamplighter,
    "free": _run_free,
    "drift": _run_drift,
    "cover": _run_cover,
    "invariance": _run_invariance,
}


def _print_summary(rec: RunRecord, limit: int = 12) -> None:
    print(f"command: {rec.config.command}   status: {rec.status}")
    shown = rec.metrics[:limit]
    if shown:
        print(f"{'metric':<28}  {'n':>8}  {'value':>14}  {'stderr':>10}  mode")
    for row in shown:
        se = _short(row["stderr"]) if row["stderr"] is not None else ""
        print(f"{row['metric']:<28}  {row['n']:>8}  "
              f"{_short(row['value']):>14}  {se:>10}  {row['mode'] or ''}")
    extra = len(rec.metrics) - len(shown)
    if extra > 0:
        print(f"... {extra} more row(s); use --csv or --json for the "
              f"full table")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    try:
        if args.command == "report":
            return _run_report(args)
        params = _resolve_params(args.command, args)
        caps = _build_caps(params)
        outputs = {k: v for k, v in (("csv", args.csv),
                                     ("store", args.store)) if v}
        rec = RunRecord.begin(RunConfig(args.command, params, outputs),
                              __version__)
        code = _HANDLERS[args.command](params, caps, rec)
        rec.close()
        store = Store(args.store)
        path, created = store.save(rec)
        _print_summary(rec)
        word = "written" if created else "matches stored payload"
        print(f"record {rec.config.config_hash()} {word} -> {path}")
        if args.csv:
            write_csv(rec, args.csv)
            print(f"csv -> {args.csv}")
        if args.json_out:
            print(json.dumps(rec.to_dict(), indent=1, sort_keys=True))
        return code
    except ResourceCapError as exc:
        print(f"resource cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StoreLockedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StoreConflictError as exc:
        print(f"determinism violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
