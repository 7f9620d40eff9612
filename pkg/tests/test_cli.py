import json
import pathlib

import pytest

from gctl.cli import main
from gctl.hsm import flatten
from gctl.modelfile import kripke_to_model, parse_model, render_model

MODELS = pathlib.Path(__file__).resolve().parent.parent / "models"
FIG2 = str(MODELS / "fig2.gctl")
RETRY = str(MODELS / "retry.gctl")


class TestCheck:
    def test_fig2_both_engines_agree(self, capsys):
        code = main(["check", "--model", FIG2, "--formula", "E F p3",
                     "--engine", "both"])
        out = capsys.readouterr().out
        assert code == 0
        assert "holds" in out

    def test_retry_fails_with_counterexample(self, capsys):
        code = main(["check", "--model", RETRY, "--formula",
                     "A G ((t1 & fail) -> A F abort)", "--witnesses", "1"])
        out = capsys.readouterr().out
        assert code == 1
        assert "Try1.Fail" in out and "Abort" not in out.split("traces:")[1]

    def test_empty_formula_usage_error(self, capsys):
        code = main(["check", "--model", FIG2, "--formula", "  "])
        assert code == 2

    def test_json_format(self, capsys):
        code = main(["check", "--model", RETRY, "--formula",
                     "A G ((t1 & fail) -> A F abort)", "--witnesses", "1",
                     "--format", "json"])
        assert code == 1
        doc = json.loads(capsys.readouterr().out)
        assert doc["result"] is False
        assert doc["engine"] == "hier"
        trace = doc["traces"][0]
        assert trace["states"][0] == "Start"
        assert isinstance(trace["loop_start"], int)
        assert set(doc["stats"]) == {"flat_states", "copies", "millis"}

    def test_engine_auto_picks_flat_for_single_machine(self, tmp_path, capsys):
        flat = tmp_path / "flat.gctl"
        assert main(["flatten", "--model", FIG2, "--output", str(flat)]) == 0
        capsys.readouterr()
        code = main(["check", "--model", str(flat), "--formula", "E F p3",
                     "--format", "json"])
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        assert doc["engine"] == "flat"
        assert doc["stats"]["flat_states"] == 14

    def test_budget_exceeded(self, capsys):
        code = main(["check", "--model", FIG2, "--formula", "E F p3",
                     "--engine", "flat", "--budget", "5"])
        assert code == 4

    def test_budget_env_var(self, capsys, monkeypatch):
        monkeypatch.setenv("GCTL_BUDGET", "5")
        code = main(["check", "--model", FIG2, "--formula", "E F p3",
                     "--engine", "flat"])
        assert code == 4
        monkeypatch.setenv("GCTL_BUDGET", "100")
        code = main(["check", "--model", FIG2, "--formula", "E F p3",
                     "--engine", "flat"])
        assert code == 0

    def test_missing_model(self, capsys):
        code = main(["check", "--model", "/nonexistent.gctl",
                     "--formula", "true"])
        assert code == 2

    def test_report_to_file(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = main(["check", "--model", FIG2, "--formula", "E F p3",
                     "--format", "json", "--output", str(out)])
        assert code == 0
        assert json.loads(out.read_text())["result"] is True

    def test_deterministic_output(self, capsys):
        args = ["check", "--model", FIG2, "--formula", "E>1 [true U p1]",
                "--witnesses", "2", "--format", "json"]
        main(args)
        first = json.loads(capsys.readouterr().out)
        main(args)
        second = json.loads(capsys.readouterr().out)
        first["stats"].pop("millis")
        second["stats"].pop("millis")
        assert first == second


class TestFlatten:
    def test_fig2_roundtrip(self, tmp_path, capsys, fig2_flat):
        out = tmp_path / "flat.gctl"
        assert main(["flatten", "--model", FIG2, "--output", str(out)]) == 0
        reparsed = parse_model(out.read_text())
        assert len(reparsed.machines) == 1
        ks = flatten(reparsed)
        assert ks.n_states == 14
        assert ks.n_transitions == fig2_flat.n_transitions
        # graph equal modulo the dot -> underscore renaming
        rename = {n: n.replace(".", "_") for n in fig2_flat.names}
        want = {(rename[fig2_flat.names[s]], rename[fig2_flat.names[t]])
                for s, t in fig2_flat.edge_set()}
        got = {(ks.names[s], ks.names[t]) for s, t in ks.edge_set()}
        assert want == got

    def test_single_machine_identity(self, tmp_path, capsys):
        src = tmp_path / "one.gctl"
        src.write_text("""
        machine M
          init a;
          node a [p];
          node b;
          edge a -> b;
          edge b -> a;
        end
        """)
        out = tmp_path / "flat.gctl"
        assert main(["flatten", "--model", str(src), "--output", str(out)]) == 0
        reparsed = parse_model(out.read_text())
        m = reparsed.machines[0]
        assert m.vertices == ["a", "b"]
        assert m.initial == "a"
        assert m.label("a") == {"p"}


class TestValidateCmd:
    def test_fig2_valid_restricted(self, capsys):
        assert main(["validate", "--model", FIG2, "--restricted"]) == 0
        assert "valid SHSM" in capsys.readouterr().out

    def test_sink_invalid_then_repaired(self, tmp_path, capsys):
        src = tmp_path / "sink.gctl"
        src.write_text("""
        machine M
          init a;
          out z;
          node a;
          node z;
          edge a -> z;
        end
        """)
        assert main(["validate", "--model", str(src)]) == 3
        capsys.readouterr()
        assert main(["validate", "--model", str(src),
                     "--repair-self-loops"]) == 0


class TestGen:
    def test_deterministic(self, tmp_path, capsys):
        a, b = tmp_path / "a.gctl", tmp_path / "b.gctl"
        main(["gen", "--machines", "3", "--seed", "11", "--output", str(a)])
        main(["gen", "--machines", "3", "--seed", "11", "--output", str(b)])
        assert a.read_text() == b.read_text()
        other = tmp_path / "c.gctl"
        main(["gen", "--machines", "3", "--seed", "12", "--output", str(other)])
        assert a.read_text() != other.read_text()

    def test_generated_validates(self, tmp_path, capsys):
        out = tmp_path / "m.gctl"
        assert main(["gen", "--machines", "4", "--boxes", "2", "--exits", "2",
                     "--seed", "5", "--output", str(out)]) == 0
        assert main(["validate", "--model", str(out), ]) == 0

    def test_deep_family_is_exponential(self, tmp_path, capsys):
        out = tmp_path / "deep.gctl"
        assert main(["gen", "--machines", "15", "--nodes", "1", "--boxes", "2",
                     "--exits", "1", "--seed", "1", "--output", str(out)]) == 0
        from gctl.hsm import flat_size
        assert flat_size(parse_model(out.read_text())) >= 2 ** 14


class TestBench:
    def test_equal_verdicts_and_table(self, capsys):
        code = main(["bench", "--model", FIG2, "--formula", "E F p1",
                     "--repeat", "2"])
        out = capsys.readouterr().out
        assert code == 0
        assert "hier" in out and "flat" in out

    def test_zero_repeat_usage_error(self, capsys):
        assert main(["bench", "--model", FIG2, "--formula", "E F p1",
                     "--repeat", "0"]) == 2

    def test_csv(self, capsys):
        code = main(["bench", "--model", FIG2, "--formula", "E F p1",
                     "--repeat", "1", "--format", "csv"])
        out = capsys.readouterr().out
        assert code == 0
        assert out.splitlines()[0] == "engine,verdict,best_ms,mean_ms,worst_ms"

    def test_hier_beats_flat_on_deep_family(self, tmp_path, capsys):
        model = tmp_path / "deep.gctl"
        main(["gen", "--machines", "12", "--nodes", "1", "--boxes", "2",
              "--exits", "1", "--props", "1", "--plain-boxes", "--seed", "4",
              "--output", str(model)])
        capsys.readouterr()
        code = main(["bench", "--model", str(model), "--formula", "E F p0",
                     "--repeat", "2", "--format", "csv"])
        out = capsys.readouterr().out
        assert code == 0
        times = {}
        for line in out.splitlines()[1:]:
            engine, _verdict, best, _mean, _worst = line.split(",")
            times[engine] = float(best)
        assert times["hier"] < times["flat"]


class TestModelFormat:
    def test_render_parse_roundtrip(self, fig2_model):
        text = render_model(fig2_model)
        again = parse_model(text)
        assert render_model(again) == text

    def test_comments_and_whitespace(self):
        model = parse_model("""
        // a comment
        machine M
          init a;   // trailing comment
          node a [p, q];
          edge a -> a;
        end
        """)
        assert model.machines[0].label("a") == {"p", "q"}

    def test_kripke_export_sanitizes_names(self, fig2_flat):
        model = kripke_to_model(fig2_flat)
        assert all("." not in v for v in model.machines[0].vertices)

    def test_forward_reference_rejected(self):
        from gctl.errors import ModelSyntaxError
        with pytest.raises(ModelSyntaxError):
            parse_model("""
            machine A
              init a;
              node a;
              box b expands B;
              edge a -> b;
            end
            machine B
              init c;
              node c;
              edge c -> c;
            end
            """)

    def test_garbage_raises_typed_errors_only(self):
        import random

        from gctl.errors import ModelSyntaxError
        rng = random.Random(77)
        words = ["machine", "end", "init", "out", "node", "box", "edge",
                 "expands", "M", "a", "z", "->", ";", "[p]", "a.z", "//x", "\n"]
        for _ in range(2000):
            text = " ".join(rng.choice(words)
                            for _ in range(rng.randint(0, 20)))
            try:
                parse_model(text)
            except ModelSyntaxError:
                pass

    def test_stray_semicolons_ignored(self):
        model = parse_model("machine M\n;\n  init a;;\n  node a;\n"
                            "  edge a -> a;\nend\n")
        assert model.machines[0].initial == "a"

    def test_missing_semicolon_reported(self):
        from gctl.errors import ModelSyntaxError
        with pytest.raises(ModelSyntaxError) as err:
            parse_model("machine M\n  init a;\n  node a\nend\n")
        assert "missing ';'" in str(err.value)

    def test_merged_statements_rejected(self):
        from gctl.errors import ModelSyntaxError
        with pytest.raises(ModelSyntaxError):
            parse_model("machine M\n  init a\n  node a;\nend\n")
