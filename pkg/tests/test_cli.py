import csv
import json
from pathlib import Path

import numpy as np
import pytest

from assistance import cli
from assistance.io import dump_state, parse_state_file, state_from_dict, state_to_dict
from assistance.qstate import StateError, ghz, random_mixed

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(argv, capsys):
    code, out, err = run([*argv, "--format", "json"], capsys)
    assert code == 0, err
    return json.loads(out)


# -- state files -------------------------------------------------------------


def test_parse_fixtures():
    bell = parse_state_file(FIXTURES / "bell.json")
    assert bell.dims == (2, 2) and bell.is_pure
    g = parse_state_file(FIXTURES / "ghz.json")
    assert g.dims == (2, 2, 2) and g.is_pure
    assert parse_state_file(FIXTURES / "maximally-mixed.json").kind == "mixed"


def test_bad_trace_is_named():
    with pytest.raises(StateError, match=r"bad_trace.json: .*trace 0.98"):
        parse_state_file(FIXTURES / "bad_trace.json")


@pytest.mark.parametrize(
    "obj, message",
    [
        ({"dims": [2], "kind": "pure"}, "missing field 'data'"),
        ({"dims": [2, 2], "kind": "pure", "data": [[1, 0], [0, 0]]}, "does not match dims"),
        ({"dims": [2], "kind": "pure", "data": [[1, 0], [1, 0]]}, "norm"),
        ({"dims": [2], "kind": "pure", "data": [[1, 0], "x"]}, r"data\[1\]"),
        ({"dims": [2], "kind": "mixed", "data": [[1.2, 0], [0, -0.2]]}, "negative eigenvalue"),
        ({"dims": [2], "kind": "mixed", "data": [[1, 0], [0]]}, "unequal lengths"),
        ({"dims": [0], "kind": "pure", "data": []}, "dims"),
        ({"dims": [2], "kind": "other", "data": []}, "kind"),
    ],
)
def test_validation_messages(obj, message):
    with pytest.raises(StateError, match=message):
        state_from_dict(obj, "f.json")


def test_malformed_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"dims": [2], ')
    with pytest.raises(StateError, match="malformed JSON at line 1"):
        parse_state_file(p)


def test_dump_parse_round_trip_is_exact(tmp_path):
    for state in (ghz(3, 0.3), random_mixed((2, 3), 4, 2)):
        path = tmp_path / "s.json"
        dump_state(state, path)
        back = parse_state_file(path)
        assert back.dims == state.dims and back.kind == state.kind
        assert np.array_equal(back.data, state.data) or np.max(np.abs(back.data - state.data)) < 1e-15
        assert state_to_dict(back)["dims"] == list(state.dims)


# -- subcommands ---------------------------------------------------------------


def test_bounds_examples(capsys):
    r = run_json(["bounds", FIXTURES / "ghz.json"], capsys)
    assert r["lower"] == pytest.approx(1.0) and r["upper"] == pytest.approx(1.0)
    r = run_json(["bounds", FIXTURES / "product.json"], capsys)
    assert r["lower"] == pytest.approx(0.0, abs=1e-12) and r["upper"] == pytest.approx(0.0, abs=1e-12)


def test_bounds_sample_is_deterministic_and_reports_seed(capsys):
    a = run(["bounds", "--sample", "2,2,3", "--seed", "7"], capsys)
    b = run(["bounds", "--sample", "2,2,3", "--seed", "7"], capsys)
    assert a == b and a[0] == 0
    assert "seed" in a[1] and " 7" in a[1]


def test_dump_round_trip_through_cli(tmp_path, capsys):
    path = tmp_path / "sampled.json"
    first = run_json(["bounds", "--sample", "2,3,3", "--seed", "3", "--dump", path], capsys)
    again = run_json(["bounds", path, "--seed", "3"], capsys)
    for key in ("lower", "upper", "tangle_upper"):
        assert again[key] == pytest.approx(first[key], abs=1e-12)


def test_tangle_routes(capsys):
    r = run_json(["tangle", FIXTURES / "ghz.json", "--restarts", "8"], capsys)
    assert r["value"] == pytest.approx(1.0, abs=1e-9)
    r = run_json(["tangle", FIXTURES / "w.json", "--measured", "2", "--restarts", "8"], capsys)
    assert r["value"] == pytest.approx(2 / 3, abs=1e-8)
    r = run_json(["tangle", FIXTURES / "maximally-mixed.json", "--objective", "eoa"], capsys)
    assert r["value"] == pytest.approx(1.0, abs=1e-9)


def test_monogamy_examples(capsys):
    r = run_json(["monogamy", "--ghz", 3, "--restarts", 8], capsys)
    assert r["reports"][0]["margin"] == pytest.approx(1.0, abs=1e-9)
    r = run_json(["monogamy", "--product", 4], capsys)
    assert r["reports"][0]["margin"] == pytest.approx(0.0, abs=1e-10)
    code, out, _ = run(["monogamy", "--ghz", 3, "--restarts", 8], capsys)
    assert code == 0 and "min margin" in out and "seed=0" in out


def test_monogamy_campaign_csv_and_json_twin(tmp_path, capsys):
    out = tmp_path / "camp.csv"
    code, _, err = run(
        ["monogamy", "--random", 6, "--n", 3, "--seed", 11, "--restarts", 8, "--format", "csv", "-o", out], capsys
    )
    assert code == 0
    assert "violation candidates 0" in err
    lines = out.read_text().splitlines()
    assert lines[0] == "# seed=11"
    rows = list(csv.DictReader(lines[1:]))
    assert len(rows) == 6
    assert list(rows[0]) == ["state_id", "n", "kind", "rank", "pairwise_1", "pairwise_2", "bipartite", "margin", "quality"]
    assert min(float(r["margin"]) for r in rows) >= -1e-6
    twin = json.loads(out.with_suffix(".json").read_text())
    assert [r["state_id"] for r in twin["reports"]] == [r["state_id"] for r in rows]
    assert "diagnostics" in twin["reports"][0]


def test_monogamy_state_files(capsys):
    r = run_json(["monogamy", FIXTURES / "ghz.json", FIXTURES / "w.json", "--restarts", 8], capsys)
    assert [x["state_id"] for x in r["reports"]] == ["ghz", "w"]
    assert r["reports"][1]["margin"] == pytest.approx(4 / 9, abs=1e-8)


def test_channel_examples(capsys):
    r = run_json(["channel", FIXTURES / "bell.json"], capsys)
    vals = [r[k] for k in ("tangle_oracle", "ca_squared", "sigma_y_chain", "lambda_min_s2")]
    assert vals == pytest.approx([1, 1, 1, 1], abs=1e-9)
    r = run_json(["channel", FIXTURES / "maximally-mixed.json"], capsys)
    vals = [r[k] for k in ("tangle_oracle", "ca_squared", "sigma_y_chain", "lambda_min_s2")]
    assert vals == pytest.approx([1, 1, 0.25, 0], abs=1e-9)
    r = run_json(["channel", FIXTURES / "classical.json"], capsys)
    assert r["tangle_oracle"] == pytest.approx(1, abs=1e-9) and r["lambda_min_s2"] == pytest.approx(0, abs=1e-12)


def test_channel_filters_when_needed(capsys):
    r = run_json(["channel", "--sample", "2,2", "--rank", 4, "--seed", 2], capsys)
    assert r["filtered"] and r["filter_scale"] > 0
    assert min(r["margins"]) >= -1e-6
    assert r["i_measure"] == pytest.approx(r["i_measure_direct"], abs=1e-6)
    code, _, err = run(["channel", "--sample", "2,2", "--rank", 4, "--no-filter"], capsys)
    assert code == 2 and "normalize_filter" in err


def test_channel_rank_deficient_hint(capsys):
    code, out, err = run(["channel", FIXTURES / "product-2q.json"], capsys)
    assert code == 2 and out == ""
    assert "rank-deficient" in err and "normalize_filter" in err


def test_sample_and_dump(capsys):
    code, out, _ = run(["sample", "--sample", "2,3", "--rank", 2, "--seed", 4], capsys)
    assert code == 0
    s = state_from_dict(json.loads(out))
    assert s.dims == (2, 3) and s.kind == "mixed"
    code, out, _ = run(["dump", "--named", "ghz", "--n", 4], capsys)
    assert state_from_dict(json.loads(out)).dims == (2, 2, 2, 2)
    code, out, _ = run(["dump", FIXTURES / "bell.json"], capsys)
    assert json.loads(out) == json.loads((FIXTURES / "bell.json").read_text())


# -- config and exit codes -----------------------------------------------------


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"seed": 3, "sample": "2,3,3", "optimizer": {"restarts": 4}}))
    r = run_json(["bounds", "--config", cfg], capsys)
    assert r["seed"] == 3 and r["restarts"] == 4
    r = run_json(["bounds", "--config", cfg, "--seed", 5, "--restarts", 6], capsys)
    assert r["seed"] == 5 and r["restarts"] == 6


def test_run_config_is_serializable(tmp_path, capsys):
    ns = cli.build_parser().parse_args(["bounds", "--sample", "2,2", "--seed", "1"])
    cfg = cli.build_config(ns)
    path = tmp_path / "rc.json"
    path.write_text(json.dumps(cfg.to_dict()))
    again = cli.build_config(cli.build_parser().parse_args(["bounds", "--config", str(path)]))
    assert again == cfg


@pytest.mark.parametrize(
    "argv",
    [
        ["bounds", FIXTURES / "bad_trace.json"],
        ["bounds"],
        ["bounds", "--sample", "2,x"],
        ["monogamy", "--random", 3, "--ghz", 3],
        ["monogamy", "--random", 2, "--n", 8],
        ["channel", FIXTURES / "ghz.json"],
    ],
)
def test_input_errors_exit_2(argv, capsys):
    code, out, err = run(argv, capsys)
    assert code == 2 and out == "" and err.startswith("error:")


def test_unknown_config_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    code, _, err = run(["bounds", "--config", cfg], capsys)
    assert code == 2 and "bogus" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["bounds", "--format", "xml"])
    assert exc.value.code == 2


def test_numerical_failure_exits_3(monkeypatch, capsys):

    def broken(*args, **kwargs):
        raise np.linalg.LinAlgError("SVD did not converge")

    monkeypatch.setattr(cli.AssistanceBounds, "fit", broken)
    code, out, err = run(["bounds", FIXTURES / "ghz.json"], capsys)
    assert code == 3 and out == "" and "numerical failure" in err


def test_non_finite_output_exits_3(monkeypatch, capsys):
    monkeypatch.setattr(cli, "i_measure", lambda rho: float("nan"))
    code, out, _ = run(["channel", FIXTURES / "bell.json"], capsys)
    assert code == 3 and out == ""
