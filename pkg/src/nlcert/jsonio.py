"""Canonical JSON for games, strategies and reports.

Question and answer tuples are written as comma-joined labels. Exact
probabilities are strings "p/q" (or "p"); float probabilities are JSON
numbers. Floats are written with repr precision, so parse(dump(x))
reproduces every bit.
"""

from __future__ import annotations

import itertools
import json
from fractions import Fraction

import numpy as np

from .certify import Entry, EpsilonReport
from .games import GameError, GameSpec
from .strategies import QuantumStrategy, StrategyError, make_strategy

TUPLE_SEP = ","


class FormatError(ValueError):
    pass


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def loads(text: str, what: str = "input"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"{what}: line {e.lineno} column {e.colno}: {e.msg}") from None


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, np.generic):
        return v.item()
    return v


# -- games ----------------------------------------------------------------------

def _cells(game: GameSpec):
    for idx in itertools.product(*(range(s) for s in game.shape)):
        yield idx, TUPLE_SEP.join(game.question_sets[p][i] for p, i in enumerate(idx))


def game_to_dict(game: GameSpec) -> dict:
    dist = {}
    for idx, key in _cells(game):
        p = game.distribution[idx]
        if p != 0:
            dist[key] = str(p) if game.is_rational else float(p)
    if game.is_xor:
        payoff = {"type": "sign", "signs": {key: int(game.signs[idx]) for idx, key in _cells(game)}}
    else:
        wins = {}
        for idx, key in _cells(game):
            table = game.win[idx]
            wins[key] = [
                TUPLE_SEP.join(game.answer_sets[p][a] for p, a in enumerate(ans))
                for ans in zip(*np.nonzero(table))
            ]
        payoff = {"type": "predicate", "answers": [list(a) for a in game.answer_sets], "win": wins}
    out = {
        "players": game.players,
        "questions": [list(q) for q in game.question_sets],
        "distribution": dist,
        "payoff": payoff,
    }
    if game.name:
        out["name"] = game.name
    if game.meta:
        out["meta"] = _jsonable(game.meta)
    return out


def _split(key: str, sizes_index, what: str):
    parts = key.split(TUPLE_SEP)
    if len(parts) != len(sizes_index):
        raise FormatError(f"{what} key {key!r} has {len(parts)} parts, expected {len(sizes_index)}")
    try:
        return tuple(lookup[p] for lookup, p in zip(sizes_index, parts))
    except KeyError as e:
        raise FormatError(f"{what} key {key!r}: unknown label {e.args[0]!r}") from None


def game_from_dict(d: dict) -> GameSpec:
    try:
        qs = tuple(tuple(str(x) for x in q) for q in d["questions"])
        if d.get("players", len(qs)) != len(qs):
            raise FormatError("players does not match the number of question sets")
        shape = tuple(len(q) for q in qs)
        qidx = [{q: i for i, q in enumerate(qq)} for qq in qs]
        raw = d["distribution"]
        exact = all(isinstance(v, str) for v in raw.values())
        if not exact and any(isinstance(v, str) for v in raw.values()):
            raise FormatError("distribution mixes exact strings and floats")
        dist = np.empty(shape, dtype=object) if exact else np.zeros(shape)
        if exact:
            dist[...] = Fraction(0)
        for key, v in raw.items():
            idx = _split(key, qidx, "distribution")
            dist[idx] = Fraction(v) if exact else float(v)
        pay = d["payoff"]
        kind = pay.get("type")
        common = dict(name=d.get("name", ""), meta=dict(d.get("meta", {})))
        if kind == "sign":
            signs = np.zeros(shape, dtype=np.int8)
            seen = 0
            for key, v in pay["signs"].items():
                signs[_split(key, qidx, "signs")] = int(v)
                seen += 1
            if seen != int(np.prod(shape)):
                raise FormatError(f"sign tensor lists {seen} cells, expected {int(np.prod(shape))}")
            return GameSpec(qs, dist, signs=signs, **common)
        if kind == "predicate":
            answers = tuple(tuple(str(x) for x in a) for a in pay["answers"])
            aidx = [{a: i for i, a in enumerate(aa)} for aa in answers]
            win = np.zeros(shape + tuple(len(a) for a in answers), dtype=bool)
            for key, lst in pay["win"].items():
                q = _split(key, qidx, "win")
                for ans in lst:
                    win[q + _split(ans, aidx, "answer")] = True
            return GameSpec(qs, dist, answer_sets=answers, win=win, **common)
        raise FormatError(f"payoff type must be 'sign' or 'predicate', got {kind!r}")
    except (KeyError, TypeError) as e:
        raise FormatError(f"malformed game: missing or invalid field {e}") from None
    except (ValueError, ZeroDivisionError) as e:
        if isinstance(e, (FormatError, GameError)):
            raise
        raise FormatError(f"malformed game: {e}") from None


def dump_game(game: GameSpec) -> str:
    return dumps(game_to_dict(game))


def load_game(text: str) -> GameSpec:
    return game_from_dict(loads(text, "game"))


# -- strategies -------------------------------------------------------------------

def _mat(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def _unmat(d) -> np.ndarray:
    re = np.asarray(d["re"], dtype=float)
    im = np.asarray(d.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != im.shape:
        raise FormatError("re and im parts differ in shape")
    out = np.empty(re.shape, dtype=complex)
    out.real, out.imag = re, im  # re + 1j*im would lose signed zeros
    return out


def strategy_to_dict(s: QuantumStrategy) -> dict:
    obs = []
    for p, table in enumerate(s.observables):
        for q in sorted(table):
            entry = {"player": p, "question": q, **_mat(table[q])}
            if s.factors is not None:
                entry["factors"] = [_mat(f) for f in s.factors[p][q]]
            obs.append(entry)
    out = {
        "dims": list(s.local_dims),
        "state": {"re": s.state.real.tolist(), "im": s.state.imag.tolist()},
        "observables": obs,
    }
    if s.meta:
        out["meta"] = _jsonable(s.meta)
    return out


def strategy_from_dict(d: dict) -> QuantumStrategy:
    try:
        if "base" in d:
            from .repetition import repeat_strategy

            return repeat_strategy(strategy_from_dict(d["base"]), int(d["copies"]), d.get("rule", "xor_combine"))
        dims = [int(x) for x in d["dims"]]
        state = _unmat(d["state"])
        obs = [dict() for _ in dims]
        factors = [dict() for _ in dims] if any("factors" in o for o in d["observables"]) else None
        for o in d["observables"]:
            p = int(o["player"])
            if not 0 <= p < len(dims):
                raise FormatError(f"observable for unknown player {p}")
            obs[p][str(o["question"])] = _unmat(o)
            if factors is not None:
                factors[p][str(o["question"])] = tuple(_unmat(f) for f in o.get("factors", []))
        return make_strategy(dims, state, obs, factors=tuple(factors) if factors else None, meta=d.get("meta"))
    except (KeyError, TypeError) as e:
        raise FormatError(f"malformed strategy: missing or invalid field {e}") from None
    except StrategyError:
        raise


def dump_strategy(s: QuantumStrategy) -> str:
    return dumps(strategy_to_dict(s))


def load_strategy(text: str) -> QuantumStrategy:
    return strategy_from_dict(loads(text, "strategy"))


# -- reports -----------------------------------------------------------------------

def report_to_dict(r: EpsilonReport) -> dict:
    d = r.as_dict()
    d["entries"] = [dict(e.as_dict(), tol=e.tol) for e in r.entries]
    return d


def report_from_dict(d: dict) -> EpsilonReport:
    entries = tuple(
        Entry(e["bound_id"], e["lhs"], e["rhs"], e.get("tol", 1e-8), e.get("note", ""), e.get("degenerate", 0))
        for e in d["entries"]
    )
    return EpsilonReport(d["epsilon"], entries, d["strategy_bias"], d["optimal_bias"], d.get("family", ""), d.get("meta", {}))
