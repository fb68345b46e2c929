"""
Tests for run configuration parsing, result emission and the wordperc CLI
"""
import json

import pytest

from app.backend.cli import main
from app.backend.config import parse_config
from app.backend.emit import CSV_COLUMNS, emit, parse_jsonl, render, render_svg
from app.backend.errors import ConfigError, DomainError
from app.backend.schemas import ConstantPn, EstimateRecord, HarmonicPn, WordsSeen

RUN_CONF = """
# words seen from the origin
experiment = words_seen
L = 2
widths = 3,3
height = 6
K = 3
eps = 0.6
trials = 4
"""


def record(i: int = 0, p_hat: float = 0.3) -> EstimateRecord:
    return EstimateRecord(
        experiment="ms_count",
        spec_digest="abc",
        spec={"experiment": {"kind": "ms_count", "m": i + 1}, "gamma": 0.8},
        trials=10,
        successes=int(p_hat * 10),
        p_hat=p_hat,
        ci_lo=max(0.0, p_hat - 0.2),
        ci_hi=min(1.0, p_hat + 0.2),
        master_seed=0,
    )


class TestParseConfig:
    def test_file_values(self):
        cfg = parse_config(RUN_CONF)
        spec = cfg.to_spec()
        assert spec.experiment == WordsSeen(L=2)
        assert spec.params.K == 3
        assert spec.box.describe() == "3x3x6"

    def test_flags_override_file(self):
        cfg = parse_config(RUN_CONF, ["--K=5", "--height=lazy"])
        assert cfg.K == 5
        assert cfg.box().height is None

    def test_letters_must_be_bits(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("letters = ab\n")
        assert exc.value.key == "letters"

    def test_unknown_key_names_key_and_line(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("K = 1\nbogus = 2\n")
        assert exc.value.key == "bogus"
        assert exc.value.line == 2

    def test_invalid_value_names_key_and_line(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("\np = 1.5\n")
        assert exc.value.key == "p"
        assert exc.value.line == 2

    def test_malformed_line(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("K 3\n")
        assert exc.value.line == 1

    def test_unknown_flag(self):
        with pytest.raises(ConfigError):
            parse_config("", ["--nope=1"])

    def test_pn_families(self):
        assert parse_config("pn = constant:0.3").model_params().pn == ConstantPn(q=0.3)
        assert parse_config("pn = harmonic").model_params().pn == HarmonicPn(c=1.0)
        assert parse_config("pn = custom:0.5,0.25").model_params().pn.values == (0.5, 0.25)
        with pytest.raises(ConfigError) as exc:
            parse_config("pn = geometric:2").model_params()
        assert exc.value.key == "pn"

    def test_sources(self):
        cfg = parse_config("experiment = ms_count\nm = 1\ngamma = 0.9\nsources = 1,2;2,1")
        assert cfg.to_spec().experiment.sources == ((1, 2), (2, 1))

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("experiment = percolate").to_spec()
        assert exc.value.key == "experiment"

    def test_sweep_points(self):
        assert parse_config("sweep_key = K\nsweep_values = 0,5,10").sweep_points() == ("K", [0.0, 5.0, 10.0])
        with pytest.raises(ConfigError):
            parse_config("sweep_key = K").sweep_points()


class TestEmit:
    def test_csv_header_and_row(self):
        lines = render([record()], "csv").splitlines()
        assert len(lines) == 2
        assert lines[0].split(",") == CSV_COLUMNS

    def test_jsonl_round_trip(self):
        records = [record(0), record(1, 0.5)]
        assert parse_jsonl(render(records, "jsonl")) == records

    def test_svg_one_marker_per_point(self):
        svg = render_svg([record(i, 0.1 * i) for i in range(5)], sweep_key="m")
        assert svg.count("<circle") == 5
        assert "<desc>" in svg

    def test_svg_needs_records(self):
        with pytest.raises(DomainError):
            render_svg([])

    def test_unknown_format(self):
        with pytest.raises(DomainError):
            render([record()], "xml")

    def test_emit_writes_file(self, tmp_path):
        path = tmp_path / "out.csv"
        text = emit([record()], "csv", str(path), sweep_key="m")
        assert path.read_text() == text
        assert text.splitlines()[1].split(",")[CSV_COLUMNS.index("sweep_value")] == "1"


class TestCli:
    """wordperc entry point and exit codes"""

    def test_bounds(self, capsys):
        assert main(["bounds", "chernoff", "--beta=0", "--t=1", "--m=2"]) == 0
        header, row = capsys.readouterr().out.splitlines()
        assert header == "bound,beta,m,t,value"
        assert float(row.split(",")[-1]) == pytest.approx(2.718281828 ** -8, rel=1e-6)

    def test_unknown_bound(self):
        assert main(["bounds", "nope"]) == 2

    def test_estimate_jsonl(self, tmp_path, capsys):
        conf = tmp_path / "run.conf"
        conf.write_text(RUN_CONF)
        assert main(["estimate", "--config", str(conf)]) == 0
        (rec,) = parse_jsonl(capsys.readouterr().out)
        assert rec.trials == 4
        assert rec.config["K"] == 3

    def test_sweep_defaults_to_csv(self, tmp_path):
        out = tmp_path / "sweep.csv"
        argv = ["sweep", "--experiment=ms_count", "--m=1", "--gamma=0.8", "--sweep_key=gamma",
                "--sweep_values=0.6,0.9", "--trials=3", f"--output={out}"]
        assert main(argv) == 0
        assert len(out.read_text().splitlines()) == 3

    def test_oracle(self, capsys):
        assert main(["oracle", "--widths=3,3", "--height=6", "--K=3", "--L=2"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["L"] == 2
        assert 0 <= out["cardinality"] <= 4

    def test_explore(self, capsys):
        assert main(["explore", "--N=3", "--M=3", "--max_diag=3", "--K=5", "--word=110100"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert all("direction" in json.loads(line) for line in lines)

    def test_oriented(self, capsys):
        assert main(["oriented", "--gamma=1.0", "--m=1", "--trials=2"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("m,gamma,event")
        assert lines[1].split(",")[5] == "1.0"

    def test_ms_count_with_sources(self, capsys):
        argv = ["oriented", "--experiment=ms_count", "--gamma=1.0", "--m=1", "--sources=1,2", "--trials=2"]
        assert main(argv) == 0
        header, row = capsys.readouterr().out.splitlines()
        assert row.split(",")[2] == "M_S<4m"
        assert row.split(",")[4] == "0"

    def test_ms_count_rejects_w_left(self):
        assert main(["oriented", "--experiment=ms_count", "--gamma=1.0", "--m=1", "--w_left=3"]) == 2

    def test_bad_letters_exit_code(self):
        argv = ["estimate", "--experiment=black_step", "--letters=ab", "--N=1", "--M=1", "--max_diag=1"]
        assert main(argv) == 2

    def test_config_error_exit_code(self):
        assert main(["estimate", "--bogus=1"]) == 2

    def test_resource_refusal_exit_code(self):
        assert main(["oracle", "--widths=3,3", "--height=6", "--L=20"]) == 3

    def test_io_error_exit_code(self, tmp_path):
        assert main(["estimate", "--config", str(tmp_path / "missing.conf")]) == 4
