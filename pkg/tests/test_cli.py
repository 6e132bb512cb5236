import csv
import io
import json

import pytest

from present_cema.cli import main
from present_cema.traceio import file_size, read_trace_set

KEY_HEX = "0123456789ABCDEF1357"
FAST = ["--samples", "2560", "--seed", "5"]


def run(*argv):
    buf = io.StringIO()
    code = main([str(a) for a in argv], out=buf)
    return code, buf.getvalue()


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    active, idle = d / "active.emts", d / "idle.emts"
    code, text = run("gen", "--traces", 256, "--key", KEY_HEX, "--out", active)
    assert code == 0
    info = json.loads(text)
    assert info["bytes"] == file_size(256, 4096) == active.stat().st_size
    assert run("gen", "--traces", 64, "--idle", "--out", idle)[0] == 0
    return {"dir": d, "active": active, "idle": idle}


def test_gen_is_reproducible(tmp_path):
    a, b = tmp_path / "a.emts", tmp_path / "b.emts"
    for p in (a, b):
        assert run("gen", "--traces", 8, "--key", KEY_HEX, "--out", p, *FAST)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert run("gen", "--traces", 8, "--out", a)[0] == 1  # no key, not idle


def test_attack_json(files):
    code, text = run("attack", "--in", files["active"], "--top", 3)
    assert code == 0
    rep = json.loads(text)
    assert rep["recovered_bytes"] == KEY_HEX[:16]
    assert {"byte_index", "recovered", "peak_rho", "sample_index", "confident", "top"} <= set(rep["bytes"][0])
    assert len(rep["bytes"][0]["top"]) == 3


def test_attack_csv_and_surface(files):
    surf = files["dir"] / "surf.csv"
    code, text = run("attack", "--in", files["active"], "--csv", "--top", 2,
                     "--surface-byte", 3, "--surface-csv", surf)
    assert code == 0
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0][:3] == ["byte_index", "rank", "candidate"]
    assert len(rows) == 1 + 8 * 2
    assert rows[1][2] == KEY_HEX[0:2]
    with open(surf) as fh:
        srows = list(csv.reader(fh))
    assert srows[0] == ["candidate", "sample", "rho"] and len(srows) == 1 + 256 * 4096


def test_attack_with_pass_filter(files):
    code, text = run("attack", "--in", files["active"], "--filter", "0:300e6")
    assert code == 0 and json.loads(text)["recovered_bytes"] == KEY_HEX[:16]


def test_attack_idle_is_unconfident(files):
    assert run("attack", "--in", files["idle"])[0] == 3


def test_attack_bad_input(files, tmp_path):
    bad = tmp_path / "bad.emts"
    bad.write_bytes(b"NOPE" + bytes(60))
    assert run("attack", "--in", bad)[0] == 2
    assert run("attack", "--in", tmp_path / "missing.emts")[0] == 2
    trunc = tmp_path / "trunc.emts"
    trunc.write_bytes(files["active"].read_bytes()[:-10])
    assert run("attack", "--in", trunc)[0] == 2


def test_encrypt_decrypt():
    assert run("encrypt", "--key", "0" * 20, "--pt", "0" * 16) == (0, "5579C1387B228445\n")
    assert run("decrypt", "--key", "F" * 20, "--ct", "E72C46C0F5945049") == (0, "0" * 16 + "\n")
    code, text = run("encrypt", "--key", "0" * 20, "--pt", "0" * 16, "--json")
    assert json.loads(text)["ciphertext"] == "5579C1387B228445"
    assert run("encrypt", "--key", "ZZZ", "--pt", "0")[0] == 1
    assert run("encrypt", "--key", "1" * 21, "--pt", "0")[0] == 1


def test_usage_errors():
    assert run()[0] == 1
    assert run("frobnicate")[0] == 1
    assert run("sr", "--pattern", "12", "--runs", 1)[0] == 1


def test_sema(files):
    code, text = run("sema", "--active", files["active"], "--idle", files["idle"])
    assert code == 0
    assert 1.8 <= json.loads(text)["ratio_rms"] <= 2.2
    code, text = run("sema", "--active", files["active"], "--idle", files["idle"], "--csv")
    assert len(text.splitlines()) == 1 + 256 + 64


def test_semfa(files):
    code, text = run("semfa", "--in", files["active"], "--peaks", 4, "--idle", files["idle"])
    assert code == 0
    d = json.loads(text)
    assert d["bin_resolution_hz"] == pytest.approx(2.5e9 / 4096)
    assert len(d["peaks"]) == 4 and len(d["difference_peaks"]) == 4
    code, text = run("semfa", "--in", files["idle"], "--csv")
    assert len(text.splitlines()) == 1 + 2049
    code, text = run("semfa", "--in", files["idle"], "--spectrogram", "256:128")
    d = json.loads(text)
    assert len(d["magnitudes"]) == (4096 - 256) // 128 + 1
    assert len(d["frequencies_hz"]) == 129
    assert run("semfa", "--in", files["idle"], "--spectrogram", "256:256")[0] == 1


def test_filter_roundtrip(files, tmp_path):
    dest = tmp_path / "f.emts"
    code, text = run("filter", "--in", files["idle"], "--out", dest, "--notch-at", "reference")
    assert code == 0 and json.loads(text)["bands"][0]["mode"] == "notch"
    ts = read_trace_set(dest)
    assert len(ts) == 64 and ts.samples_per_trace == 4096
    assert run("filter", "--in", files["idle"], "--out", dest)[0] == 1
    assert run("filter", "--in", files["idle"], "--out", dest, "--filter", "0:2e9")[0] == 1


def test_sr_deterministic_and_csv():
    argv = ["sr", "--pattern", "aa", "--runs", 2, "--traces", 64, "--noise", 0, *FAST]
    a, b = run(*argv), run(*argv)
    assert a == b and a[0] == 0
    d = json.loads(a[1])
    assert d["pattern"] == "10101010b" and d["success_rate"] == [1.0] * 8
    code, text = run(*argv, "--csv")
    assert text.splitlines()[0] == "byte_index,successes,runs,success_rate"


def test_bfa(files):
    pt = "0011223344556677"
    _, ct = run("encrypt", "--key", KEY_HEX, "--pt", pt)
    code, text = run("bfa", "--partial", KEY_HEX[:16], "--pt", pt, "--ct", ct.strip())
    assert code == 0 and json.loads(text)["key"] == KEY_HEX
    code, text = run("bfa", "--partial", "F" + KEY_HEX[1:16], "--pt", pt, "--ct", ct.strip())
    assert code == 3 and json.loads(text)["found"] is False
    code, text = run("bfa", "--in", files["active"])
    assert code == 0 and json.loads(text)["key"] == KEY_HEX
    assert run("bfa", "--pt", pt)[0] == 1
