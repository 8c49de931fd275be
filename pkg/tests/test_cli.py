import json
from fractions import Fraction

import numpy as np
import pytest

from nlcert.cli import EXIT_ERROR, EXIT_FINDING, EXIT_OK, main
from nlcert.games import build_xor_game
from nlcert.jsonio import dump_game


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out else None), err


@pytest.fixture
def files(tmp_path, capsys):
    def make(name, *argv):
        code, out, _ = run(capsys, *argv)
        assert code == EXIT_OK
        p = tmp_path / name
        p.write_text(json.dumps(out))
        return str(p)
    return make


def test_build_and_show(capsys, files):
    path = files("chsh.json", "game", "build", "--family", "chsh", "--n", "3")
    code, out, err = run(capsys, "game", "show", path)
    assert code == EXIT_OK
    assert out["questions"][0] == ["1", "2", "3"]
    assert "game tensor" in err


def test_classical_values(capsys, files):
    ffl = files("ffl.json", "game", "build", "--family", "ffl")
    assert run(capsys, "value", "classical", ffl)[1]["value"] == "2/3"
    cyc = files("c5.json", "game", "build", "--family", "odd_cycle", "--n", "5")
    assert run(capsys, "value", "classical", cyc)[1]["value"] == "9/10"


def test_quantum_value_is_deterministic(capsys, files):
    chsh = files("chsh.json", "game", "build", "--family", "chsh")
    a = run(capsys, "value", "quantum", chsh, "--seed", "7")[1]
    b = run(capsys, "value", "quantum", chsh, "--seed", "7")[1]
    assert a == b
    assert a["bias"] == pytest.approx(2 ** -0.5, abs=1e-9)


def test_repeat_then_quantum(capsys, files):
    chsh = files("chsh.json", "game", "build", "--family", "chsh")
    rep = files("rep.json", "repeat", chsh, "--k", "2", "--rule", "xor")
    out = run(capsys, "value", "quantum", rep)[1]
    assert out["bias"] == pytest.approx(0.5, abs=1e-8)
    assert out["rule"] == "xor_combine"


def test_strategy_eval_and_certify(capsys, files):
    chsh = files("chsh.json", "game", "build", "--family", "chsh", "--n", "3")
    opt = files("opt.json", "strategy", "make", "--n", "3")
    code, out, _ = run(capsys, "strategy", "eval", chsh, opt)
    assert out["bias"] == pytest.approx(2 ** -0.5)
    code, out, err = run(capsys, "certify", chsh, opt)
    assert code == EXIT_OK
    assert all(e["pass"] for e in out["entries"])
    assert "bound" in err


def test_certify_perturbed_passes(capsys, files):
    chsh = files("chsh.json", "game", "build", "--family", "chsh")
    s = files("p.json", "strategy", "make", "--perturb", "0.05", "--seed", "3", "--ancilla")
    code, out, _ = run(capsys, "certify", chsh, s, "--omega", "0.7071067811865476")
    assert code == EXIT_OK
    assert out["epsilon"] > 0


def test_certify_needs_omega_for_non_xor(capsys, files):
    ffl = files("ffl.json", "game", "build", "--family", "ffl")
    s = files("s.json", "strategy", "make")
    assert run(capsys, "certify", ffl, s)[0] == EXIT_ERROR


def test_sdp_audit(capsys, tmp_path):
    rng = np.random.default_rng(3)
    shape = (3, 4, 6)
    g = build_xor_game(
        [[str(i) for i in range(k)] for k in shape],
        rng.choice([-1, 1], size=shape).tolist(),
        np.full(shape, Fraction(1, 72), dtype=object).tolist(),
    )
    p = tmp_path / "g3.json"
    p.write_text(dump_game(g))
    a = run(capsys, "sdp", "audit", str(p), "--family", "3xor", "--omega", "1/2")
    b = run(capsys, "sdp", "audit", str(p), "--family", "3xor", "--omega", "1/2")
    assert a == b
    assert a[0] == (EXIT_OK if a[1]["psd"] else EXIT_FINDING)
    assert a[1]["players"] == 3 and a[1]["n"] == 3


def test_opident_actions(capsys, tmp_path):
    def inp(obj):
        p = tmp_path / "in.json"
        p.write_text(json.dumps(obj))
        return str(p)

    sz, sx = [[1, 0], [0, -1]], [[0, 1], [1, 0]]
    code, out, _ = run(capsys, "opident", "defect", inp({"A": sz, "B": sx, "sign": "-"}))
    assert code == EXIT_OK and out["spectrum"]["psd"]
    code, out, _ = run(capsys, "opident", "defect", inp({"A": sz, "B": sx, "sign": "+"}))
    assert code == EXIT_OK and out["max_discrepancy"] == pytest.approx(4)
    assert out["spectrum"]["eigenvalues"] == pytest.approx([4, 4])
    code, out, _ = run(capsys, "opident", "kernel", inp({"T": [[1, 0], [0, 0]], "ops": [sz]}))
    assert code == EXIT_OK and out["kernel_dim"] == 1
    code, out, _ = run(capsys, "opident", "oddprod", inp({"n": 3}))
    assert code == EXIT_OK and out["matches"]
    code, out, _ = run(capsys, "opident", "schur", inp({"T": [[1, 0], [0, 1]], "A": [sz], "B": [sz]}))
    assert code == EXIT_OK and out["residuals"] == [0.0]
    assert run(capsys, "opident", "kernel", inp({"T": [[1]]}))[0] == EXIT_ERROR


def test_malformed_input_exits_one(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"questions": [')
    code, out, err = run(capsys, "game", "show", str(p))
    assert code == EXIT_ERROR and out is None
    assert "line 1 column" in err
    assert run(capsys, "game", "show", str(tmp_path / "missing.json"))[0] == EXIT_ERROR


def test_run_record(capsys, files, tmp_path):
    ffl = files("ffl.json", "game", "build", "--family", "ffl")
    rec = tmp_path / "rec"
    code, out, _ = run(capsys, "--out", str(rec), "value", "classical", ffl)
    r = json.loads((rec / "run.json").read_text())
    assert r["exit_code"] == code == EXIT_OK
    assert r["output"] == out
    assert set(r["inputs"]) == {ffl}
    assert len(r["inputs"][ffl]) == 64
    assert r["version"] and r["wall_time_s"] >= 0
