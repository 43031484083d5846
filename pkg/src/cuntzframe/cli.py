"""Command line interface.

Exit status: 0 on success, 1 on input errors (bad config, bad arguments),
2 when a verification fails.  Every command reads ``--config PATH`` (a JSON
file or the name of a shipped fixture); randomized commands are driven by
``--seed``.  ``--csv PATH`` and ``--json PATH`` write machine-readable
results (``-`` means standard output).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .frames import l2q_frame_vector, l2q_pairing, l2q_words, walsh_atoms, walsh_words
from .invariants import find_minimal_sets_1d, orbit, random_rational_points, verify_invariant, walk_from_minimal_set
from .model import as_point, check_filter_matrix, check_no_overlap, fmt_point, is_expansive
from .serialize import LMAX_CAP, ConfigError, RunConfig, fixture_names, fixture_path, parse_config, validate_params
from .verify import (
    frame_atoms_at,
    gram,
    incompleteness_check,
    l2q_frame_bounds,
    parseval_profiles,
    walsh_atom_matrix,
    walsh_gram,
    walsh_parseval_defects,
)
from .walkgraph import WalkGraph, analyze, describe_vertex, enumerate_cycle_words
from .words import word_str

EXIT_OK, EXIT_INPUT, EXIT_FAIL = 0, 1, 2


class InputError(Exception):
    pass


class VerificationFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers


def _load(args) -> RunConfig:
    if args.config is None:
        raise InputError("--config is required")
    p = Path(args.config)
    if not p.exists() and args.config in fixture_names():
        p = fixture_path(args.config)
    cfg = parse_config(p)
    if args.lmax is not None:
        cfg.lmax = args.lmax
    if args.depth is not None:
        cfg.depth = args.depth
    if args.seed is not None:
        cfg.seed = args.seed
    validate_params(cfg)
    return cfg


def _need(cfg: RunConfig, *kinds: str) -> None:
    if cfg.kind not in kinds:
        raise InputError(f"this command needs a config of kind {' or '.join(kinds)}, got {cfg.kind!r}")


def _num(x: float) -> str:
    return repr(float(x))


def _emit_csv(args, header: list, rows: list) -> None:
    if not args.csv:
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    _write(args.csv, buf.getvalue())


def _emit_json(args, obj) -> None:
    if args.json:
        _write(args.json, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write(dest: str, text: str) -> None:
    if dest == "-":
        sys.stdout.write(text)
    else:
        Path(dest).write_text(text)


def _parse_vertex(g: WalkGraph, text: str):
    for v in g.vertices:
        if describe_vertex(v) == text or str(v) == text:
            return v
    try:
        return g.vertices[g.index(_point_arg(text))]
    except (KeyError, ValueError, ZeroDivisionError):
        raise InputError(f"{text!r} is not a vertex (vertices: {', '.join(describe_vertex(v) for v in g.vertices)})") from None


def _point_arg(text: str) -> tuple:
    parts = [p for p in text.replace("(", "").replace(")", "").split(",")]
    try:
        return as_point([p.strip() for p in parts])
    except (ValueError, ZeroDivisionError):
        raise InputError(f"cannot read {text!r} as a rational point") from None


def _minimal_sets(cfg: RunConfig) -> list[tuple]:
    """Minimal sets of a filter config: exact search in 1-D, orbits of the basepoints otherwise."""
    fs = cfg.system
    if fs.d == 1:
        return [tuple(S.points) for S in find_minimal_sets_1d(fs)]
    if not cfg.basepoints:
        raise InputError("minimal-set search needs dimension 1; give params.basepoints for d >= 2")
    out = []
    for c in cfg.basepoints:
        S = tuple(orbit(fs, c))
        rep = verify_invariant(fs, S)
        if not rep.ok:
            raise VerificationFailure(f"the orbit of {fmt_point(c)} is not a minimal invariant set of extreme cycle points")
        out.append(S)
    return out


def _walks(cfg: RunConfig) -> list[tuple]:
    """(label, walk, default vertex) for every walk a config describes."""
    if cfg.kind == "walk":
        return [("walk", cfg.walk, cfg.walk.vertices[0])]
    _need(cfg, "filter", "walk")
    out = []
    for S in _minimal_sets(cfg):
        label = "{" + ", ".join(fmt_point(p) for p in S) + "}"
        out.append((label, walk_from_minimal_set(cfg.system, S), S[0]))
    return out


def _basepoints(cfg: RunConfig) -> list:
    if cfg.basepoints:
        return list(cfg.basepoints)
    return [S[0] for S in _minimal_sets(cfg)]


def _random_step_values(rng, N: int, n: int, count: int) -> np.ndarray:
    return rng.normal(size=(count, N**n)) + 1j * rng.normal(size=(count, N**n))


# ---------------------------------------------------------------------------
# commands


def cmd_inspect(args) -> int:
    cfg = _load(args)
    info: dict = {"kind": cfg.kind, "name": cfg.name}
    lines = [f"config: {cfg.name or args.config} ({cfg.kind})"]
    if cfg.kind == "filter":
        fs = cfg.system
        chk = check_filter_matrix(fs, cfg.tolerances["mat"])
        overlap = check_no_overlap(fs)
        info.update(
            dimension=fs.d,
            R=[list(r) for r in fs.ifs.R],
            digits=fs.N,
            letters=fs.M,
            expansive=is_expansive(fs.ifs.R),
            filter_class=chk.kind.value,
            filter_defect=chk.max_defect,
            no_overlap=overlap,
            alpha_form=fs.is_alpha_form,
        )
        lines += [
            f"dimension {fs.d}, N = {fs.N} digits, M = {fs.M} letters",
            f"expansive: {str(info['expansive']).lower()}",
            f"filter matrix: {chk.kind.value} (defect {chk.max_defect:.2e})",
            f"no-overlap: {str(overlap).lower()}",
            f"b-independent coefficients: {str(fs.is_alpha_form).lower()}",
        ]
        status = EXIT_FAIL if chk.kind.value == "Invalid" else EXIT_OK
    elif cfg.kind == "walk":
        rep = analyze(cfg.walk)
        info.update(vertices=cfg.walk.n, letters=cfg.walk.M, **rep.as_dict())
        lines += [f"{cfg.walk.n} vertices, M = {cfg.walk.M}"] + [f"{k}: {v}" for k, v in rep.as_dict().items()]
        status = EXIT_OK if rep.normalized else EXIT_FAIL
    elif cfg.kind == "walsh":
        A = cfg.walsh
        M, N = A.shape
        defect = float(np.max(np.abs(A.conj().T @ A / N - np.eye(N))))
        info.update(rows=M, columns=N, normalization_defect=defect, unitary=M == N and defect <= cfg.tolerances["mat"])
        lines += [f"A is {M} x {N}", f"(1/N) A^* A - I: {defect:.2e}"]
        status = EXIT_OK if defect <= cfg.tolerances["mat"] else EXIT_FAIL
    else:
        lines.append("fixed l^2(Q) model with v_0 = e_0 and maps r -> 2r + i")
        status = EXIT_OK
    print("\n".join(lines))
    _emit_json(args, info)
    return status


def cmd_minimal_sets(args) -> int:
    cfg = _load(args)
    _need(cfg, "filter")
    sets = _minimal_sets(cfg)
    for S in sets:
        print("{" + ", ".join(fmt_point(p) for p in S) + "}")
    _emit_csv(args, ["set", "point"], [[k, fmt_point(p)] for k, S in enumerate(sets) for p in S])
    _emit_json(args, [[fmt_point(p) for p in S] for S in sets])
    return EXIT_OK


def cmd_walk_analyze(args) -> int:
    cfg = _load(args)
    reports = []
    for label, g, _ in _walks(cfg):
        rep = analyze(g)
        inc = None
        if rep.normalized:
            inc = incompleteness_check(g, g.vertices[0])
        print(f"{label}:")
        for k, v in rep.as_dict().items():
            print(f"  {k}: {v}")
        if inc is not None:
            print(f"  {inc.verdict}")
        reports.append({"walk": label, **rep.as_dict(), "single_cycle": inc.single_cycle if inc else None, "multi_cycle": inc.multi_cycle if inc else None})
    _emit_json(args, reports)
    return EXIT_OK if all(r["normalized"] for r in reports) else EXIT_FAIL


def cmd_cycle_words(args) -> int:
    cfg = _load(args)
    chosen = []
    for _, g, default in _walks(cfg):
        if args.vertex is None:
            chosen.append((g, default))
        elif _safe_has(g, args.vertex):
            chosen.append((g, _parse_vertex(g, args.vertex)))
    if not chosen:
        raise InputError(f"{args.vertex!r} is not a vertex of any walk of this config")
    header = ["vertex", "word", "length", "weight_re", "weight_im", "weight_abs"]
    rows = []
    for g, v in chosen:
        cws = enumerate_cycle_words(g, v, cfg.lmax)
        print(f"cycle words at {describe_vertex(v)} up to length {cfg.lmax}: " + (", ".join(word_str(c.word) for c in cws) or "none"))
        for c in cws:
            rows.append([describe_vertex(v), word_str(c.word), len(c.word), _num(c.weight.real), _num(c.weight.imag), _num(abs(c.weight))])
    _emit_csv(args, header, rows)
    _emit_json(args, [dict(zip(header, r)) for r in rows])
    return EXIT_OK


def _safe_has(g: WalkGraph, text: str) -> bool:
    try:
        _parse_vertex(g, text)
        return True
    except InputError:
        return False


def cmd_frame_export(args) -> int:
    cfg = _load(args)
    _need(cfg, "filter", "walsh", "l2q")
    if cfg.kind == "filter":
        header = ["basepoint", "word", "length", "label", "weight_re", "weight_im"]
        rows = []
        for c in _basepoints(cfg):
            for a in frame_atoms_at(cfg.system, c, cfg.lmax):
                rows.append([fmt_point(c), word_str(a.word), len(a.word), fmt_point(a.label), _num(a.weight.real), _num(a.weight.imag)])
    elif cfg.kind == "walsh":
        header = ["word", "length", "values"]
        rows = [
            [word_str(f.word), f.level, " ".join(f"{_num(z.real)}{'+' if z.imag >= 0 else '-'}{_num(abs(z.imag))}j" for z in f.values)]
            for f in walsh_atoms(cfg.walsh, cfg.lmax)
        ]
    else:
        header = ["word", "length", "support"]
        rows = []
        for w in l2q_words(cfg.lmax):
            v = l2q_frame_vector(w)
            rows.append([word_str(w), len(w), " ".join(f"{r}:{_num(v[r].real)}" for r in v.support())])
    print(f"{len(rows)} atoms up to length {cfg.lmax}")
    _emit_csv(args, header, rows)
    _emit_json(args, [dict(zip(header, r)) for r in rows])
    return EXIT_OK


def cmd_gram(args) -> int:
    cfg = _load(args)
    _need(cfg, "filter", "walsh")
    if cfg.kind == "filter":
        atoms = [a for c in _basepoints(cfg) for a in frame_atoms_at(cfg.system, c, cfg.lmax)]
        rep = gram(atoms, cfg.system, cfg.depth)
    else:
        rep = walsh_gram(walsh_atoms(cfg.walsh, cfg.lmax))
    tol = args.tol
    print(f"{rep.size} atoms; max |G_jk| (j != k) = {rep.max_offdiag:.3e}; max |G_jj - 1| = {rep.max_diag_dev:.3e}")
    if rep.depth is not None:
        print(f"mu_hat depth {rep.depth}, last-factor deviation {rep.tail:.3e}")
    _emit_json(args, rep._asdict() | {"max_dev": rep.max_dev})
    if args.expect_orthonormal and rep.max_dev > tol:
        print(f"FAIL: Gram matrix deviates from the identity by {rep.max_dev:.3e} > {tol:g}")
        return EXIT_FAIL
    return EXIT_OK


def cmd_parseval(args) -> int:
    cfg = _load(args)
    _need(cfg, "filter", "walsh")
    rng = np.random.default_rng(cfg.seed)
    tol = cfg.tolerances["num"] if args.tol is None else args.tol
    rows = []
    ok = True
    if cfg.kind == "filter":
        fs = cfg.system
        if args.t:
            ts = [_point_arg(t) for t in args.t]
        else:
            ts = random_rational_points(rng, fs.d, args.samples, max_den=100, span=10)
        for t in ts:
            if len(t) != fs.d:
                raise InputError(f"frequency {fmt_point(t)} has dimension {len(t)}, expected {fs.d}")
        profs = parseval_profiles(fs, _basepoints(cfg), ts, cfg.lmax, cfg.depth)
        for t, p in zip(ts, profs):
            good = p.monotone and p.bessel(tol)
            ok = ok and good
            print(f"t = {fmt_point(t)}: s_{cfg.lmax} = {p.sums[-1]:.12f} monotone={p.monotone} bounded={p.bessel(tol)}")
            rows += [[fmt_point(t), n, _num(s)] for n, s in zip(p.cutoffs, p.sums)]
    else:
        A = cfg.walsh
        N = A.shape[1]
        X = walsh_atom_matrix(A, cfg.lmax)
        lengths = np.array([len(w) for w in walsh_words(A.shape[0], cfg.lmax)])
        F = _random_step_values(rng, N, cfg.lmax, args.samples)
        for k, f in enumerate(F):
            pair2 = np.abs(X.conj() @ f / N**cfg.lmax) ** 2
            sums = np.cumsum(np.bincount(lengths, weights=pair2, minlength=cfg.lmax + 1))
            target = float(np.sum(np.abs(f) ** 2)) / N**cfg.lmax
            mono = bool(np.all(np.diff(sums) >= 0))
            good = mono and sums[-1] <= target * (1 + tol) and abs(sums[-1] - target) <= tol * max(1.0, target)
            ok = ok and good
            print(f"f{k}: s_{cfg.lmax} = {sums[-1]:.12f}, ||f||^2 = {target:.12f}")
            rows += [[f"f{k}", n, _num(s)] for n, s in enumerate(sums)]
    _emit_csv(args, ["test", "n", "s_n"], rows)
    _emit_json(args, [dict(zip(["test", "n", "s_n"], r)) for r in rows])
    if not ok:
        print("FAIL: a partial-sum profile is not nondecreasing or exceeds ||v||^2")
        return EXIT_FAIL
    return EXIT_OK


def cmd_walsh_verify(args) -> int:
    cfg = _load(args)
    _need(cfg, "walsh")
    A = cfg.walsh
    rng = np.random.default_rng(cfg.seed)
    F = _random_step_values(rng, A.shape[1], cfg.lmax, args.samples)
    defects = walsh_parseval_defects(A, cfg.lmax, F)
    worst = float(np.max(defects))
    tol = cfg.tolerances["num"] if args.tol is None else args.tol
    out = {"samples": args.samples, "level": cfg.lmax, "max_defect": worst, "tolerance": tol}
    print(f"{args.samples} random step functions of level {cfg.lmax}: max Parseval defect {worst:.3e}")
    if A.shape[0] == A.shape[1]:
        rep = walsh_gram(walsh_atoms(A, cfg.lmax))
        out["gram_max_dev"] = rep.max_dev
        print(f"{rep.size} atoms: max |G - I| = {rep.max_dev:.3e}")
        worst = max(worst, rep.max_dev)
    _emit_csv(args, ["sample", "defect"], [[k, _num(d)] for k, d in enumerate(defects)])
    _emit_json(args, out)
    if worst > tol:
        print(f"FAIL: defect {worst:.3e} > {tol:g}")
        return EXIT_FAIL
    return EXIT_OK


def cmd_l2q(args) -> int:
    lmax = args.lmax if args.lmax is not None else 11
    if not 2 <= lmax <= LMAX_CAP:
        raise InputError(f"--lmax must be in 2..{LMAX_CAP}")
    rows = []
    worst = 0.0
    for m in range(1, lmax):
        got = l2q_pairing(m, (0,) * m + (1,))
        want = 2 ** (-(m + 1) / 2)
        worst = max(worst, abs(got - want))
        rows.append([m, word_str((0,) * m + (1,)), _num(got.real), _num(want)])
        print(f"<e_{2 ** m}, V_{word_str((0,) * m + (1,))} v_0> = {got.real:.15f}  (2^-{m + 1}/2 = {want:.15f})")
    lo, hi = l2q_frame_bounds(range(1, lmax), lmax)
    print(f"frame-bound estimate on e_2 .. e_{2 ** (lmax - 1)}: lower {lo:.6e}, upper {hi:.6e}")
    print("the lower bound halves with every extra test vector, so the family has no positive lower frame bound")
    _emit_csv(args, ["m", "word", "pairing", "expected"], rows)
    _emit_json(args, {"pairings": [dict(zip(["m", "word", "pairing", "expected"], r)) for r in rows], "lower": lo, "upper": hi})
    if worst > 1e-12 or lo > 2.0 ** (-lmax) * (1 + 1e-12):
        return EXIT_FAIL
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .acceptance import run_acceptance

    seed = args.seed if args.seed is not None else 0
    results = run_acceptance(seed, args.only)
    for r in results:
        print(r.line())
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    _emit_json(args, [r._asdict() for r in results])
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config, or the name of a shipped fixture")
    common.add_argument("--lmax", type=int, metavar="N", help="maximal word length")
    common.add_argument("--depth", type=int, metavar="N", help="truncation depth of the mu_hat product")
    common.add_argument("--seed", type=int, metavar="N", help="seed for randomized inputs")
    common.add_argument("--csv", metavar="PATH", help="write a CSV table ('-' for stdout)")
    common.add_argument("--json", metavar="PATH", help="write a JSON report ('-' for stdout)")

    p = argparse.ArgumentParser(prog="cuntzframe", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("inspect", parents=[common], help="filter-matrix class, no-overlap, expansiveness")
    s.set_defaults(func=cmd_inspect)
    s = sub.add_parser("minimal-sets", parents=[common], help="finite minimal invariant sets")
    s.set_defaults(func=cmd_minimal_sets)

    walk = sub.add_parser("walk", help="random-walk commands")
    wsub = walk.add_subparsers(dest="walk_command", required=True)
    s = wsub.add_parser("analyze", parents=[common], help="irreducible, injective, separating, simple")
    s.set_defaults(func=cmd_walk_analyze)

    s = sub.add_parser("cycle-words", parents=[common], help="cycle words at a vertex (CSV: vertex,word,length,weight_re,weight_im,weight_abs)")
    s.add_argument("--vertex", help="vertex label or rational point such as -1 or 0,-2/3")
    s.set_defaults(func=cmd_cycle_words)

    frame = sub.add_parser("frame", help="frame atoms")
    fsub = frame.add_subparsers(dest="frame_command", required=True)
    s = fsub.add_parser("export", parents=[common], help="atoms up to --lmax (CSV: basepoint,word,length,label,weight_re,weight_im)")
    s.set_defaults(func=cmd_frame_export)

    s = sub.add_parser("gram", parents=[common], help="Gram matrix of the atoms up to --lmax")
    s.add_argument("--expect-orthonormal", action="store_true", help="fail unless the Gram matrix is the identity")
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_gram)

    s = sub.add_parser("parseval", parents=[common], help="partial Parseval sums (CSV: test,n,s_n)")
    s.add_argument("--t", action="append", help="test frequency (repeatable); random when omitted")
    s.add_argument("--samples", type=int, default=5, help="number of random tests")
    s.add_argument("--tol", type=float, default=None)
    s.set_defaults(func=cmd_parseval)

    walsh = sub.add_parser("walsh", help="Walsh-system commands")
    wsub = walsh.add_subparsers(dest="walsh_command", required=True)
    s = wsub.add_parser("verify", parents=[common], help="exact Parseval identity on random step functions (CSV: sample,defect)")
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--tol", type=float, default=None)
    s.set_defaults(func=cmd_walsh_verify)

    ce = sub.add_parser("counterexample", help="non-frame examples")
    csub = ce.add_subparsers(dest="ce_command", required=True)
    s = csub.add_parser("l2q", parents=[common], help="l^2(Q) iterates without a lower frame bound (CSV: m,word,pairing,expected)")
    s.set_defaults(func=cmd_l2q)

    s = sub.add_parser("selftest", parents=[common], help="run the acceptance checks")
    s.add_argument("--only", type=int, action="append", metavar="K", help="run criterion K only (repeatable)")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        if getattr(args, "samples", 1) is not None and getattr(args, "samples", 1) < 1:
            raise InputError("--samples must be positive")
        return args.func(args)
    except (InputError, ConfigError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except VerificationFailure as exc:
        print(f"FAIL: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
