import json

import pytest

from rwiso import cli, experiments, graphs
from rwiso.errors import DomainError


def run_cli(args, capsys=None):
    code = cli.main(args)
    return code


class TestConfig:
    def test_defaults_and_overrides(self, tmp_path):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text(
            "[graph]\nspec: ignored\ngraph = torus:4,4\n"
            "[run]\nn = 12\nseed = 99\n[output]\nformat = json\n")
        cfg = experiments.load_config(str(cfg_file), {"n": 20, "graph": None})
        assert cfg.graph_spec == "torus:4,4"
        assert cfg.n == 20  # CLI override wins
        assert cfg.seed == 99
        assert cfg.format == "json"

    def test_missing_config_rejected(self):
        with pytest.raises(DomainError):
            experiments.load_config("/nonexistent/path.cfg", {})

    def test_validation(self):
        cfg = experiments.ExperimentConfig(graph_spec="cycle:6", n=0)
        with pytest.raises(DomainError):
            cfg.validate()

    def test_audits_parsing(self, tmp_path):
        cfg_file = tmp_path / "exp.cfg"
        cfg_file.write_text("[graph]\ngraph = cycle:6\n[audit]\naudits = tv-monotone, profile-bounds\n")
        cfg = experiments.load_config(str(cfg_file), {})
        assert cfg.audits == ["tv-monotone", "profile-bounds"]


class TestGraphSpecs:
    @pytest.mark.parametrize("spec,vertices", [
        ("torus:4,4", 16),
        ("cycle:12", 12),
        ("hypercube:3", 8),
        ("lamplighter:3", 24),
        ("complete:5", 5),
        ("random-regular:10,3", 10),
    ])
    def test_specs(self, spec, vertices):
        g = experiments.build_graph(spec, seed=1)
        assert g.vertex_count == vertices

    def test_edgelist_spec(self, tmp_path):
        p = tmp_path / "g.txt"
        p.write_text("0 1\n1 2\n2 0\n")
        g = experiments.build_graph(f"edgelist:{p}")
        assert g.vertex_count == 3

    def test_unknown_generator(self):
        with pytest.raises(DomainError):
            experiments.build_graph("moebius:7")


class TestScalingFit:
    def test_exact_power_law(self):
        ns = [4, 8, 16, 32, 64, 128]
        values = [n ** -0.5 for n in ns]
        fit = experiments.fit_power_law(ns, values)
        assert abs(fit.exponent + 0.5) < 1e-9
        assert fit.residual < 1e-12

    def test_short_series_rejected(self):
        with pytest.raises(DomainError):
            experiments.fit_power_law([4, 8], [1.0, 0.5])

    def test_nonpositive_dropped(self):
        ns = [4, 8, 16, 32, 64, 128]
        values = [n ** -1.0 for n in ns[:-1]] + [0.0]
        with pytest.raises(DomainError):
            # only 5 positive points required; dropping the zero leaves 5, fine;
            # but dropping two would fail
            experiments.fit_power_law(ns[:5], values[:4] + [0.0])


class TestCommands:
    def test_gen_round_trip(self, tmp_path, capsys):
        out = tmp_path / "graph.txt"
        code = cli.main(["gen", "--graph", "torus:3,3", "--out", str(out)])
        assert code == 0
        g = graphs.load_edge_list(out.read_text())
        assert g.vertex_count == 9

    def test_profile_csv(self, tmp_path):
        out = tmp_path / "prof.csv"
        code = cli.main(["profile", "--graph", "complete:2", "--n", "5",
                         "--out", str(out), "--seed", "7"])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "# root_seed: 7"
        assert lines[2] == "m,tv,dstar,hstar"
        assert len(lines) == 9
        # K2: tv column is 0 for every m >= 1
        for row in lines[4:]:
            assert row.split(",")[1] == "0.0"

    def test_profile_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["profile", "--graph", "torus:4,4", "--n", "10", "--seed", "3"]
        assert cli.main(args + ["--out", str(a)]) == 0
        assert cli.main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_partition_json_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        args = ["partition", "--graph", "cycle:12", "--n", "8",
                "--seeds", "10", "--seed", "21"]
        assert cli.main(args + ["--out", str(a)]) == 0
        assert cli.main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_profile_invalid_generator_usage_error(self, tmp_path):
        code = cli.main(["profile", "--graph", "nosuch:3", "--n", "5"])
        assert code == 1

    def test_curvature_json(self, tmp_path):
        out = tmp_path / "curv.json"
        code = cli.main(["curvature", "--graph", "cycle:4", "--out", str(out)])
        assert code == 0
        data = json.loads(out.read_text())
        assert data["summary"]["nonneg"] is True
        assert all(e["ric_num"] * 2 == e["ric_den"] for e in data["edges"])  # all 1/2

    def test_curvature_hypercube(self, tmp_path):
        out = tmp_path / "curv.json"
        assert cli.main(["curvature", "--graph", "hypercube:3", "--out", str(out)]) == 0
        data = json.loads(out.read_text())
        assert data["summary"]["nonneg"] is True

    def test_curvature_random_regular_report_only(self, tmp_path):
        # negative edges are reported, never asserted; exit stays 0
        out = tmp_path / "curv.json"
        code = cli.main(["curvature", "--graph", "random-regular:20,3",
                         "--seed", "1", "--out", str(out)])
        assert code == 0
        data = json.loads(out.read_text())
        assert data["summary"]["nonneg"] is False

    def test_partition_k2(self, tmp_path):
        out = tmp_path / "cert.json"
        code = cli.main(["partition", "--graph", "complete:2", "--n", "1",
                         "--seeds", "5", "--out", str(out)])
        assert code == 0
        data = json.loads(out.read_text())
        assert data["pass"] is True
        assert data["cell"]["ratio"]["num"] == 0

    def test_audit_default_suite_c6(self, tmp_path):
        out = tmp_path / "audit.json"
        code = cli.main(["audit", "--graph", "cycle:6", "--n", "8",
                         "--seed", "11", "--out", str(out)])
        assert code == 0
        data = json.loads(out.read_text())
        assert data["pass"] is True
        assert "tv-monotone" in data["audits"]

    def test_audit_green_on_k2(self, tmp_path):
        out = tmp_path / "audit.json"
        code = cli.main(["audit", "--graph", "complete:2", "--n", "6",
                         "--audits", "green-supermult,info-green,green-tail",
                         "--out", str(out)])
        assert code == 0
        data = json.loads(out.read_text())
        assert all(not v.get("skipped") for v in data["audits"].values())

    def test_audit_skips_oversized(self, tmp_path):
        out = tmp_path / "audit.json"
        code = cli.main(["audit", "--graph", "torus:8,8", "--n", "4",
                         "--audits", "max-displacement-tail", "--out", str(out)])
        assert code == 0  # skip recorded, nothing failed
        data = json.loads(out.read_text())
        assert data["audits"]["max-displacement-tail"]["skipped"] is True

    def test_empty_audit_list_trivially_passes(self):
        payload = experiments.run_audits(
            experiments.ExperimentConfig(graph_spec="complete:2", n=3, audits=[]))
        assert payload["pass"] is True
        assert payload["audits"] == {}

    def test_absent_audit_list_runs_defaults(self):
        payload = experiments.run_audits(
            experiments.ExperimentConfig(graph_spec="complete:2", n=3))
        assert len(payload["audits"]) == len(experiments.DEFAULT_AUDITS)

    def test_scaling_synthetic_torus(self, tmp_path):
        out = tmp_path / "scaling.json"
        code = cli.main(["scaling", "--graph", "torus:24,24", "--n", "64",
                         "--out", str(out), "--seed", "5"])
        assert code == 0
        data = json.loads(out.read_text())
        assert "tv" in data["fits"]
        assert data["fits"]["tv"]["exponent"] < 0

    def test_usage_error_without_graph(self):
        assert cli.main(["profile", "--n", "5"]) == 1

    def test_budget_exceeded_exit_code(self, tmp_path):
        # all-pairs TV on 5000 vertices with no transitivity hint is over budget
        p = tmp_path / "path.txt"
        p.write_text("\n".join(f"{i} {i + 1}" for i in range(5000)))
        assert cli.main(["profile", "--graph", f"edgelist:{p}", "--n", "4"]) == 3

    def test_partition_failure_exit_code(self, monkeypatch, tmp_path):
        from rwiso import coupling

        class FailedCert:
            passed = False

            def to_json(self):
                return {"pass": False}

        monkeypatch.setattr(coupling, "partition_certificate",
                            lambda *a, **k: FailedCert())
        out = tmp_path / "cert.json"
        code = cli.main(["partition", "--graph", "complete:2", "--n", "1",
                         "--out", str(out)])
        assert code == 2

    def test_config_file_end_to_end(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        out = tmp_path / "prof.csv"
        cfg.write_text(
            "[graph]\n"
            "graph = torus:4,4\n"
            "transitive_pair = 0,1\n"
            "[run]\n"
            "n = 6\n"
            "seed = 5\n"
            "[output]\n"
            f"out = {out}\n"
            "format = csv\n")
        # --n on the command line overrides the config's n = 6
        code = cli.main(["profile", "--config", str(cfg), "--n", "8"])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "# root_seed: 5"
        assert len(lines) == 3 + 9  # two comments + header + m = 0..8

    def test_curvature_isoperimetry_audit(self, tmp_path):
        out = tmp_path / "audit.json"
        code = cli.main(["audit", "--graph", "cycle:6", "--n", "6",
                         "--audits", "curvature-isoperimetry", "--out", str(out)])
        assert code == 0
        data = json.loads(out.read_text())
        details = data["audits"]["curvature-isoperimetry"]["details"]
        assert details[0]["witness"]["realized_c"] > 0
