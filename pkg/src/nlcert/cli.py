"""Command-line front end.

Exit codes: 0 clean run, 2 audit finding (a checked bound or identity
failed), 1 tool error. JSON goes to stdout; tables go to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, certify as cert, classical, games, opident, repetition, sdp, strategies
from .jsonio import (
    FormatError,
    dumps,
    game_to_dict,
    load_game,
    load_strategy,
    loads,
    report_to_dict,
    strategy_to_dict,
)

EXIT_OK, EXIT_ERROR, EXIT_FINDING = 0, 1, 2
RULE_ALIASES = {"and": "and_win", "and_win": "and_win", "xor": "xor_combine", "xor_combine": "xor_combine"}


class CliError(Exception):
    pass


class Run:
    """Collects what a RunRecord needs while a command executes."""

    def __init__(self, argv):
        self.argv = list(argv)
        self.inputs = {}
        self.seed = None
        self.stderr = sys.stderr

    def read(self, path: str) -> str:
        try:
            data = Path(path).read_bytes()
        except OSError as e:
            raise CliError(f"cannot read {path}: {e.strerror}") from None
        self.inputs[path] = hashlib.sha256(data).hexdigest()
        return data.decode("utf-8")

    def table(self, text: str) -> None:
        print(text, file=self.stderr)


# -- helpers ------------------------------------------------------------------

def _matrix(obj) -> np.ndarray:
    if isinstance(obj, dict):
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
        return re + 1j * im
    return np.asarray(obj, dtype=complex)


def _parse_omega(s):
    if s is None:
        return None
    try:
        return float(Fraction(s))
    except (ValueError, ZeroDivisionError):
        raise CliError(f"--omega must be a number or p/q, got {s!r}") from None


def _build(family: str, n: int | None) -> games.GameSpec:
    if family == "chsh":
        return games.build_chsh(n if n is not None else 2)
    if family in ("odd_cycle", "oddcycle"):
        return games.build_odd_cycle(n if n is not None else 3)
    if family == "ffl":
        return games.build_ffl()
    raise CliError(f"unknown game family {family!r} (chsh, odd_cycle, ffl)")


def _show(game: games.GameSpec) -> str:
    qs = game.question_sets
    lines = [f"game {game.name or '?'}: {game.players} players, questions {list(game.shape)}"]
    kind = "sign tensor" if game.is_xor else f"predicate, answers {[len(a) for a in game.answers()]}"
    lines.append(f"payoff: {kind}")
    lines.append("question tuple        probability   payoff")
    for idx in np.ndindex(*game.shape):
        key = ",".join(qs[p][i] for p, i in enumerate(idx))
        p = game.distribution[idx]
        if game.is_xor:
            pay = f"{int(game.signs[idx]):+d}"
        else:
            wins = np.argwhere(game.win[idx])
            pay = " ".join(",".join(game.answer_sets[k][a] for k, a in enumerate(w)) for w in wins)
        lines.append(f"{key:<20}  {str(p):>12}   {pay}")
    if game.is_xor and game.players == 2:
        g = games.game_tensor(game).entries
        lines.append("game tensor G = pi * V:")
        lines.append(np.array2string(g, precision=6, suppress_small=True))
    return "\n".join(lines)


def _report_table(r: cert.EpsilonReport) -> str:
    lines = [
        f"epsilon {r.epsilon:.6g}  strategy bias {r.strategy_bias:.10g}  optimal {r.optimal_bias:.10g}  family {r.family}",
        f"{'bound':<22}{'lhs':>14}{'rhs':>14}{'margin':>14}  status",
    ]
    for e in r.entries:
        status = "ok" if e.passed else "FAIL"
        if e.degenerate:
            status += f" ({e.degenerate} degenerate)"
        lines.append(f"{e.bound_id:<22}{e.lhs:>14.6g}{e.rhs:>14.6g}{e.margin:>14.6g}  {status}")
    return "\n".join(lines)


# -- commands ---------------------------------------------------------------------

def cmd_game(args, run: Run):
    if args.action == "build":
        return game_to_dict(_build(args.family, args.n)), EXIT_OK
    game = load_game(run.read(args.game))
    if args.action == "show":
        run.table(_show(game))
        return game_to_dict(game), EXIT_OK
    rule = RULE_ALIASES[args.rule]
    return game_to_dict(repetition.repeat_game(game, args.k, rule)), EXIT_OK


def cmd_repeat(args, run: Run):
    game = load_game(run.read(args.game))
    rule = RULE_ALIASES[args.rule]
    return game_to_dict(repetition.repeat_game(game, args.k, rule)), EXIT_OK


def cmd_value(args, run: Run):
    game = load_game(run.read(args.game))
    if args.kind == "classical":
        if args.repeat > 1:
            res = classical.classical_value_repeated(
                game, args.repeat, mode=args.mode, budget=args.budget, exhaustive=args.exhaustive
            )
        else:
            res = classical.classical_value(game, mode=args.mode, budget=args.budget, exhaustive=args.exhaustive)
        out = res.as_dict()
        if args.repeat > 1:
            out["rule"] = "and_win"
            out["copies"] = args.repeat
        run.table(f"classical {args.mode}: {out['value']}  (ties {res.tie_count}, strategies {res.strategies})")
        return out, EXIT_OK
    run.seed = args.seed
    res = sdp.quantum_bias_bipartite(game, tol=args.tol_solver, restarts=args.restarts, seed=args.seed)
    out = {
        "bias": res.bias,
        "winprob": (1 + res.bias) / 2,
        "restart_values": list(res.restart_values),
        "winner": res.winner,
        "sweeps": res.sweeps,
        "monotone": res.monotone,
        "seed": args.seed,
    }
    if game.meta.get("rule"):
        out["rule"] = game.meta["rule"]
    run.table(f"quantum bias {res.bias:.12g}  winprob {(1 + res.bias) / 2:.12g}")
    return out, EXIT_OK


def cmd_strategy(args, run: Run):
    if args.action == "make":
        if args.family != "chsh":
            raise CliError(f"unknown strategy family {args.family!r} (chsh)")
        if args.perturb:
            from .perturb import perturbed_chsh

            run.seed = args.seed
            s = perturbed_chsh(args.n, args.perturb, np.random.default_rng(args.seed), ancilla=args.ancilla)
        else:
            s = strategies.optimal_chsh_strategy(args.n)
        if args.copies > 1:
            s = repetition.repeat_strategy(s, args.copies, RULE_ALIASES[args.rule])
        return strategy_to_dict(s), EXIT_OK
    game = load_game(run.read(args.game))
    s = load_strategy(run.read(args.strategy))
    out = {"winprob": strategies.eval_win_prob(s, game)}
    if game.is_xor:
        out["bias"] = strategies.eval_bias(s, game)
    run.table("  ".join(f"{k} {v:.12g}" for k, v in out.items()))
    return out, EXIT_OK


def cmd_certify(args, run: Run):
    game = load_game(run.read(args.game))
    s = load_strategy(run.read(args.strategy))
    omega = _parse_omega(args.omega)
    if omega is None:
        if not (game.is_xor and game.players == 2):
            raise CliError("--omega is required unless the game is a bipartite XOR game")
        omega = sdp.quantum_bias_bipartite(game).bias
    report = cert.certify(s, game, omega, family=args.family, tol=args.tol)
    run.table(_report_table(report))
    return report_to_dict(report), EXIT_OK if report.all_pass else EXIT_FINDING


def cmd_sdp(args, run: Run):
    game = load_game(run.read(args.game))
    if not game.is_xor:
        raise CliError("sdp audit needs an XOR game")
    omega = Fraction(args.omega) if args.omega is not None else Fraction(1)
    n = args.n or game.shape[0]
    N = args.players or game.players
    fam = args.family
    y = sdp.blockwise_dual_y(fam, n, None if fam in ("3xor", "4xor", "5xor", "ffl_wedge") else N, args.reps, omega)
    gsym = sdp.sym_matrix(game)
    cert_ = sdp.dual_certificate_audit(gsym, y, tol=args.tol if args.tol is not None else sdp.PSD_TOL)
    out = cert_.as_dict()
    out.update({"family": fam, "n": n, "players": N, "omega": str(omega), "reps": args.reps})
    run.table(f"dual certificate {fam}: min eig {cert_.min_eig:.12g}  psd {cert_.psd}  dual value {out['dual_value']:.12g}")
    return out, EXIT_OK if cert_.psd else EXIT_FINDING


def cmd_opident(args, run: Run):
    data = loads(run.read(args.inputs), "opident input")
    tol = args.tol if args.tol is not None else 1e-9
    try:
        if args.action == "defect":
            if "observables" in data:
                r = opident.nplayer_defect_operator([_matrix(o) for o in data["observables"]])
                bad = r.psd_expected and not r.spectrum.psd
            else:
                sign = {"+": 1, "-": -1, 1: 1, -1: -1}[data.get("sign", "+")]
                r = opident.defect_operator(_matrix(data["A"]), _matrix(data["B"]), sign)
                bad = not r.spectrum.psd
            return r.as_dict(), EXIT_FINDING if bad else EXIT_OK
        if args.action == "schur":
            t = _matrix(data["T"])
            if "C" in data:
                r = opident.schur3_residuals(t, _matrix(data["A"]), _matrix(data["B"]), _matrix(data["C"]))
                bad = not r.chain_holds or max(r.residuals.values()) > tol
                return r.as_dict(), EXIT_FINDING if bad else EXIT_OK
            res = opident.schur_residuals(t, [_matrix(a) for a in data["A"]], [_matrix(b) for b in data["B"]])
            out = {"residuals": res, "frobenius_norm": opident.frobenius_unit(t)[0]}
            return out, EXIT_FINDING if max(res, default=0) > tol else EXIT_OK
        if args.action == "kernel":
            r = opident.kernel_invariance(_matrix(data["T"]), [_matrix(o) for o in data["ops"]])
            return r.as_dict(), EXIT_OK if r.invariant else EXIT_FINDING
        mats = [_matrix(a) for a in data["A"]] if "A" in data else opident.tilde_family(int(data["n"]))
        r = opident.odd_product_expansion(mats)
        return r.as_dict(), EXIT_OK if r.matches else EXIT_FINDING
    except KeyError as e:
        raise CliError(f"opident {args.action}: missing field {e}") from None


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlcert", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"nlcert {__version__}")
    p.add_argument("--out", help="directory for the run record (run.json)")
    p.add_argument("--tol", type=float, default=None, help="override the pass/fail tolerance")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("game", help="build, show or repeat a game")
    gs = g.add_subparsers(dest="action", required=True)
    b = gs.add_parser("build")
    b.add_argument("--family", required=True)
    b.add_argument("--n", type=int)
    s = gs.add_parser("show")
    s.add_argument("game")
    r = gs.add_parser("repeat")
    r.add_argument("game")
    r.add_argument("--k", type=int, default=2)
    r.add_argument("--rule", choices=sorted(RULE_ALIASES), default="and")
    g.set_defaults(func=cmd_game)

    r = sub.add_parser("repeat", help="k-fold repetition of a game")
    r.add_argument("game")
    r.add_argument("--k", type=int, default=2)
    r.add_argument("--rule", choices=sorted(RULE_ALIASES), default="and")
    r.set_defaults(func=cmd_repeat)

    v = sub.add_parser("value", help="classical or quantum value")
    vs = v.add_subparsers(dest="kind", required=True)
    c = vs.add_parser("classical")
    c.add_argument("game")
    c.add_argument("--mode", choices=("winprob", "bias"), default="winprob")
    c.add_argument("--repeat", type=int, default=1)
    c.add_argument("--budget", type=int, default=classical.DEFAULT_BUDGET)
    c.add_argument("--exhaustive", action="store_true")
    q = vs.add_parser("quantum")
    q.add_argument("game")
    q.add_argument("--restarts", type=int, default=16)
    q.add_argument("--tol", dest="tol_solver", type=float, default=1e-10)
    q.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_value)

    st = sub.add_parser("strategy", help="make or evaluate a strategy")
    sts = st.add_subparsers(dest="action", required=True)
    m = sts.add_parser("make")
    m.add_argument("--family", default="chsh")
    m.add_argument("--n", type=int, default=2)
    m.add_argument("--perturb", type=float, default=0.0)
    m.add_argument("--ancilla", action="store_true")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--copies", type=int, default=1)
    m.add_argument("--rule", choices=sorted(RULE_ALIASES), default="xor")
    e = sts.add_parser("eval")
    e.add_argument("game")
    e.add_argument("strategy")
    st.set_defaults(func=cmd_strategy)

    ce = sub.add_parser("certify", help="epsilon report for a strategy")
    ce.add_argument("game")
    ce.add_argument("strategy")
    ce.add_argument("--family", choices=("ffl", "nxor", "wedge"))
    ce.add_argument("--omega")
    ce.set_defaults(func=cmd_certify)

    sd = sub.add_parser("sdp", help="dual certificate audit")
    sds = sd.add_subparsers(dest="action", required=True)
    a = sds.add_parser("audit")
    a.add_argument("game")
    a.add_argument("--family", choices=sdp.FAMILIES, required=True)
    a.add_argument("--omega")
    a.add_argument("--n", type=int)
    a.add_argument("--players", type=int)
    a.add_argument("--reps", type=int, default=1)
    sd.set_defaults(func=cmd_sdp)

    o = sub.add_parser("opident", help="operator identity checks")
    o.add_argument("action", choices=("defect", "schur", "kernel", "oddprod"))
    o.add_argument("inputs")
    o.set_defaults(func=cmd_opident)
    return p


def _write_record(run: Run, out_dir: str, output, code: int, wall: float) -> None:
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    record = {
        "argv": run.argv,
        "inputs": run.inputs,
        "seed": run.seed,
        "version": __version__,
        "exit_code": code,
        "output": output,
        "wall_time_s": wall,
    }
    (d / "run.json").write_text(dumps(record))


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "certify" and args.tol is None:
        args.tol = cert.MARGIN_TOL
    run = Run(argv)
    t0 = time.perf_counter()
    try:
        output, code = args.func(args, run)
    except (CliError, FormatError, games.GameError, strategies.StrategyError, cert.CertifyError,
            sdp.SdpError, opident.OpidentError, classical.BudgetExceeded) as e:
        print(f"nlcert: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    text = dumps(output)
    sys.stdout.write(text)
    if args.out:
        _write_record(run, args.out, json.loads(text), code, time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
