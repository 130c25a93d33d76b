from __future__ import annotations

import json

import pytest

from certtheta import cli
from certtheta.ball import ComplexBall
from certtheta.errors import BadSignPath, DomainError, OutsideBasin, PrecisionError
from certtheta.cli import EXIT_DOMAIN, EXIT_INTERNAL, EXIT_OK, EXIT_PRECISION, load_values, main

from conftest import agree_bits


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--output", "json")
    assert code == EXIT_OK, err
    return json.loads(out), out


def test_eval_const_g1_newton_matches_naive(capsys):
    doc, out = run_json(capsys, "eval-const", "--genus", "1", "--tau", "0.25+1.1i", "--prec", "256",
                        "--method", "newton")
    ref, _ = run_json(capsys, "eval-const", "--genus", "1", "--tau", "0.25+1.1i", "--prec", "256",
                      "--method", "naive")
    assert doc["method"] == "newton"
    a, b = load_values(out), {k: ComplexBall.from_dict(v) for k, v in ref["values"].items()}
    nonzero = [k for k, v in a.items() if not v.is_exact]
    assert len(nonzero) == 3
    for k in a:
        assert float(a[k].rad) <= 2.0 ** -256
        assert a[k].overlaps(b[k]) and agree_bits(a[k], b[k]) >= 254


def test_eval_const_g2_uniform_matches_naive(capsys):
    doc, out = run_json(capsys, "eval-const", "--genus", "2", "--tau", "diag(i,40i)", "--prec", "512",
                        "--method", "uniform")
    ref, ref_out = run_json(capsys, "eval-const", "--genus", "2", "--tau", "diag(i,40i)", "--prec", "512",
                            "--method", "naive")
    a, b = load_values(out), load_values(ref_out)
    assert set(a) == set(b) and len(a) == 16
    for k in a:
        assert a[k].overlaps(b[k]) and agree_bits(a[k], b[k]) >= 510
    assert "certificate" in doc


def test_verify_reports_agreement(capsys):
    code, out, _ = run(capsys, "verify", "--genus", "1", "--tau", "i", "--prec", "1024")
    assert code == EXIT_OK
    bits = int(out.split(">=")[1].split()[0])
    assert "agree" in out and bits >= 1014


def test_verify_json(capsys):
    doc, _ = run_json(capsys, "verify", "--genus", "1", "--tau", "0.1+1.3i", "--z", "0.05+0.1i",
                      "--prec", "512")
    assert doc["agree"] and doc["agreement_bits"] >= 502


def test_eval_func_text(capsys):
    code, out, _ = run(capsys, "eval-func", "--tau", "0.1+1.3i", "--z", "0.3+0.2i", "--prec", "128")
    assert code == EXIT_OK
    lines = [l for l in out.splitlines() if l.startswith("theta^2[")]
    assert len(lines) == 4 and all("rad =" in l for l in lines)


def test_json_round_trip_is_bit_exact(capsys):
    _, out = run_json(capsys, "eval-const", "--genus", "1", "--tau", "0x1p-2+0x9p-3i", "--prec", "128")
    vals = load_values(out)
    again = {k: v.to_dict("hex") for k, v in vals.items()}
    assert again == json.loads(out)["values"]


def test_reduce_json(capsys):
    doc, _ = run_json(capsys, "reduce", "--genus", "1", "--tau", "5.3+0.7i", "--z", "3.7+2.9i")
    cert = doc["certificate"]
    assert cert["certified"] and len(cert["z_shift"]) == 2
    doc, _ = run_json(capsys, "reduce", "--genus", "2", "--tau", "0.13+0.05i, 0.41+0.02i, -3.3+0.08i")
    assert len(doc["tau"]) == 3


def test_constants_command(capsys):
    code, out, _ = run(capsys, "constants")
    assert code == EXIT_OK
    table = json.loads(out)
    assert {v["n0"] for v in table.values()} == {58, 1546, 220}


def test_bench_json(capsys):
    doc, _ = run_json(capsys, "bench", "--genus", "1", "--start", "64", "--stop", "128")
    assert [r["N"] for r in doc["rows"]] == [64, 64, 128, 128]


@pytest.mark.parametrize("argv, needle", [
    (["eval-const", "--genus", "1", "--tau", "0.2+1.1i", "--method", "uniform"], "uniform"),
    (["eval-func", "--genus", "2", "--tau", "i", "--z", "0"], "genus 1"),
    (["eval-const", "--genus", "1", "--tau", "0.3-1i"], "Im"),
    (["eval-const", "--genus", "1", "--tau", "zz"], "parse"),
    (["eval-const", "--genus", "1", "--tau", "i", "--prec", "0"], "precision"),
])
def test_domain_errors_exit_2(capsys, argv, needle):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_DOMAIN
    assert needle in err


def test_newton_outside_domain_names_inequality(capsys):
    code, _, err = run(capsys, "eval-const", "--genus", "2", "--tau", "diag(1.1i, 9i)", "--method", "newton")
    assert code == EXIT_DOMAIN and "Im" in err


def test_exit_code_mapping():
    assert cli.exit_code_for(DomainError("x")) == EXIT_DOMAIN
    assert cli.exit_code_for(PrecisionError("x")) == EXIT_PRECISION
    assert cli.exit_code_for(OutsideBasin("x")) == EXIT_INTERNAL
    assert cli.exit_code_for(BadSignPath("x")) == EXIT_INTERNAL


def test_precision_error_exit_3(capsys, monkeypatch):
    def boom(*a, **k):
        raise PrecisionError("input radius too large", achievable=40)
    monkeypatch.setattr(cli, "constants_g1", boom)
    code, _, err = run(capsys, "eval-const", "--genus", "1", "--tau", "i")
    assert code == EXIT_PRECISION and "radius" in err


@pytest.mark.parametrize("genus, tau", [("1", "0.25+1.1i"), ("2", "diag(1.1i,1.3i)")])
def test_guard_bits_env(capsys, monkeypatch, genus, tau):
    monkeypatch.setenv("THETA_GUARD_BITS", "64")
    _, out = run_json(capsys, "eval-const", "--genus", genus, "--tau", tau, "--prec", "200",
                      "--method", "newton")
    with_guard = load_values(out)
    monkeypatch.delenv("THETA_GUARD_BITS")
    _, out = run_json(capsys, "eval-const", "--genus", genus, "--tau", tau, "--prec", "200",
                      "--method", "newton")
    plain = load_values(out)
    for k in plain:
        assert plain[k].overlaps(with_guard[k])
        assert float(with_guard[k].rad) <= 2.0 ** -200


def test_guard_bits_env_parsing(monkeypatch):
    from certtheta.naive import guard_bits
    monkeypatch.setenv("THETA_GUARD_BITS", "12")
    assert guard_bits(0) == 12
    monkeypatch.setenv("THETA_GUARD_BITS", "-5")
    assert guard_bits(3) == 0
    monkeypatch.setenv("THETA_GUARD_BITS", "lots")
    assert guard_bits(7) == 7
