from __future__ import annotations

import json
import os
import subprocess
import sys

import pytest

from mremix import build_from_wli, save_kv, save_split, shuffle_words
from mremix.cli import main
from mremix.formats import read_examples
from mremix.jsonio import read_json, write_json, write_jsonl

from synth import planted_splits


def _setup_dataset(tmp_path, n_train=10, n_test=8, kv_k=10):
    desc, train, test, _ = planted_splits(
        n_train_per_label=n_train, n_test_per_label=n_test, pool_size=12
    )
    save_split(tmp_path / "train.jsonl", train)
    save_split(tmp_path / "test.jsonl", test)
    kv = build_from_wli(train, desc, k=kv_k)
    save_kv(shuffle_words(kv, seed=99), tmp_path / "origin_kv.txt")
    return desc, train, test


def _run_kv_args(tmp_path, out, **extra):
    args = [
        "run-kv",
        "--family", "SCNM",
        "--language", "en",
        "--train", str(tmp_path / "train.jsonl"),
        "--test", str(tmp_path / "test.jsonl"),
        "--external-kv", str(tmp_path / "origin_kv.txt"),
        "--seed", "3",
        "--few-shot-k", "5",
        "--test-n", "20",
        "--repeats", "2",
        "--kv-k", "10",
        "--out", str(out),
    ]
    for flag, value in extra.items():
        args.extend([flag, value])
    return args


class TestValidate:
    def test_valid_file_exits_zero(self, tmp_path, capsys):
        _setup_dataset(tmp_path)
        code = main(["validate", "--family", "SCNM", "--language", "en",
                     str(tmp_path / "train.jsonl")])
        assert code == 0
        assert "OK" in capsys.readouterr().out

    def test_bad_label_exits_one_with_line(self, tmp_path, capsys):
        path = tmp_path / "bad.jsonl"
        write_jsonl(path, [
            {"id": "a", "text": "t", "text_label": "Society", "pairs": []},
            {"id": "b", "text": "t", "text_label": "Sports", "pairs": []},
        ])
        code = main(["validate", "--family", "SCNM", "--language", "en", str(path)])
        assert code == 1
        assert "line 2" in capsys.readouterr().err

    def test_missing_file_exits_two(self, tmp_path, capsys):
        code = main(["validate", "--family", "SCNM", "--language", "en",
                     str(tmp_path / "nope.jsonl")])
        assert code == 2

    def test_missing_descriptor_is_config_error(self, tmp_path):
        _setup_dataset(tmp_path)
        code = main(["validate", str(tmp_path / "train.jsonl")])
        assert code == 3

    def test_unknown_flag_is_config_error(self):
        assert main(["validate", "--nonsense"]) == 3


class TestBuildFormats:
    def test_all_tags_train(self, tmp_path):
        _setup_dataset(tmp_path)
        out = tmp_path / "formats"
        code = main(["build-formats", "--family", "SCNM", "--language", "en",
                     "--input", str(tmp_path / "train.jsonl"), "--role", "train",
                     "--tags", "all", "--out", str(out)])
        assert code == 0
        files = sorted(p.name for p in out.glob("*.jsonl"))
        assert len(files) == 7
        manifest = read_json(out / "scnm_en_train_manifest.json")
        assert len(manifest["files"]) == 7
        assert manifest["config"]["few_shot_k"] == 20  # defaults echoed

    def test_single_tag(self, tmp_path):
        _setup_dataset(tmp_path)
        out = tmp_path / "one"
        code = main(["build-formats", "--family", "SCNM", "--language", "en",
                     "--input", str(tmp_path / "train.jsonl"),
                     "--tags", "JOINT_MRE", "--out", str(out)])
        assert code == 0
        examples = read_examples(out / "scnm_en_joint_mre.train.jsonl")
        assert len(examples) == 50

    def test_test_role_emits_draws(self, tmp_path):
        _setup_dataset(tmp_path)
        out = tmp_path / "draws"
        code = main(["build-formats", "--family", "SCNM", "--language", "en",
                     "--input", str(tmp_path / "test.jsonl"), "--role", "test",
                     "--tags", "TRAD_TEXT", "--test-n", "15", "--repeats", "3",
                     "--seed", "5", "--out", str(out)])
        assert code == 0
        for d in range(3):
            assert len(read_examples(out / f"scnm_en_trad_text.test.draw{d}.jsonl")) == 15

    def test_overwrite_requires_force(self, tmp_path, capsys):
        _setup_dataset(tmp_path)
        out = tmp_path / "formats"
        args = ["build-formats", "--family", "SCNM", "--language", "en",
                "--input", str(tmp_path / "train.jsonl"),
                "--tags", "TRAD_TEXT", "--out", str(out)]
        assert main(args) == 0
        assert main(args) == 2
        assert "--force" in capsys.readouterr().err
        assert main(args + ["--force"]) == 0

    def test_unknown_tag_is_config_error(self, tmp_path, capsys):
        _setup_dataset(tmp_path)
        code = main(["build-formats", "--family", "SCNM", "--language", "en",
                     "--input", str(tmp_path / "train.jsonl"),
                     "--tags", "NOT_A_TAG", "--out", str(tmp_path / "x")])
        assert code == 3


class TestBuildKv:
    def test_writes_kv_file(self, tmp_path):
        _setup_dataset(tmp_path)
        out = tmp_path / "kv.txt"
        code = main(["build-kv", "--family", "SCNM", "--language", "en",
                     "--train", str(tmp_path / "train.jsonl"),
                     "--kv-k", "5", "--out", str(out)])
        assert code == 0
        text = out.read_text(encoding="utf-8")
        assert "[Society]" in text
        sidecar = read_json(tmp_path / "kv.txt.config.json")
        assert sidecar["kv_words_per_label"] == 5

    def test_tconer_refused_with_exclusion_message(self, tmp_path, capsys):
        desc, train, test = _setup_dataset(tmp_path)
        rows = [r.to_dict() for r in train.records]
        write_jsonl(tmp_path / "open.jsonl", rows)
        code = main(["build-kv", "--family", "TCONER", "--language", "en",
                     "--train", str(tmp_path / "open.jsonl"),
                     "--out", str(tmp_path / "kv.txt")])
        assert code == 3
        assert "open-domain" in capsys.readouterr().err


class TestScore:
    def test_emits_predictions(self, tmp_path):
        _setup_dataset(tmp_path, kv_k=10)
        kv_path = tmp_path / "wli_kv.txt"
        main(["build-kv", "--family", "SCNM", "--language", "en",
              "--train", str(tmp_path / "train.jsonl"), "--kv-k", "10",
              "--out", str(kv_path)])
        out = tmp_path / "preds.jsonl"
        code = main(["score", "--family", "SCNM", "--language", "en",
                     "--kv", str(kv_path), "--input", str(tmp_path / "test.jsonl"),
                     "--train", str(tmp_path / "train.jsonl"), "--kv-k", "10",
                     "--out", str(out)])
        assert code == 0
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(rows) == 40
        assert {"label", "record_id", "no_coverage", "scores"} <= set(rows[0])
        sidecar = read_json(tmp_path / "preds.jsonl.config.json")
        assert sidecar["kv_words_per_label"] == 10

    def test_file_provider_failure_names_record(self, tmp_path, capsys):
        _, train, test = _setup_dataset(tmp_path, kv_k=10)
        kv_path = tmp_path / "wli_kv.txt"
        main(["build-kv", "--family", "SCNM", "--language", "en",
              "--train", str(tmp_path / "train.jsonl"), "--kv-k", "10",
              "--out", str(kv_path)])
        dist_path = tmp_path / "dists.jsonl"
        write_jsonl(dist_path, [{"prompt": "not any real prompt", "probs": {"x": 1.0}}])
        code = main(["score", "--family", "SCNM", "--language", "en",
                     "--kv", str(kv_path), "--input", str(tmp_path / "test.jsonl"),
                     "--provider", f"file:{dist_path}", "--kv-k", "10",
                     "--out", str(tmp_path / "p.jsonl")])
        assert code == 1
        err = capsys.readouterr().err
        assert "provider failed" in err
        assert test.records[0].id in err


class TestEvaluate:
    def _build_draws(self, tmp_path, tag="TRAD_TEXT"):
        _setup_dataset(tmp_path)
        out = tmp_path / "draws"
        main(["build-formats", "--family", "SCNM", "--language", "en",
              "--input", str(tmp_path / "test.jsonl"), "--role", "test",
              "--tags", tag, "--test-n", "10", "--repeats", "2",
              "--seed", "5", "--out", str(out)])
        name = f"scnm_en_{tag.lower()}.test"
        draw_paths = [out / f"{name}.draw{d}.jsonl" for d in range(2)]
        gen_paths = []
        for d, draw_path in enumerate(draw_paths):
            examples = read_examples(draw_path)
            gen_path = tmp_path / f"gen{d}.jsonl"
            write_jsonl(gen_path, [
                {"record_id": e.record_id, "output": e.target} for e in examples
            ])
            gen_paths.append(gen_path)
        return draw_paths, gen_paths

    def test_perfect_generations(self, tmp_path, capsys):
        draw_paths, gen_paths = self._build_draws(tmp_path)
        out = tmp_path / "eval"
        code = main(["evaluate", "--family", "SCNM", "--language", "en",
                     "--tag", "TRAD_TEXT",
                     "--draws", *map(str, draw_paths),
                     "--generations", *map(str, gen_paths),
                     "--out", str(out)])
        assert code == 0
        report = read_json(out / "report.json")
        assert report["summary"]["text"]["f1"]["mean"] == 1.0
        assert (out / "report.md").exists()
        assert (out / "report.tsv").exists()

    def test_missing_generation_file_names_draw(self, tmp_path, capsys):
        draw_paths, gen_paths = self._build_draws(tmp_path)
        code = main(["evaluate", "--family", "SCNM", "--language", "en",
                     "--tag", "TRAD_TEXT",
                     "--draws", *map(str, draw_paths),
                     "--generations", str(gen_paths[0]), str(tmp_path / "missing.jsonl"),
                     "--out", str(tmp_path / "eval2")])
        assert code == 2
        assert "draw 1" in capsys.readouterr().err

    def test_count_mismatch_is_config_error(self, tmp_path):
        draw_paths, gen_paths = self._build_draws(tmp_path)
        code = main(["evaluate", "--family", "SCNM", "--language", "en",
                     "--tag", "TRAD_TEXT",
                     "--draws", *map(str, draw_paths),
                     "--generations", str(gen_paths[0]),
                     "--out", str(tmp_path / "eval3")])
        assert code == 3

    def test_macro_text_metric_recorded(self, tmp_path):
        draw_paths, gen_paths = self._build_draws(tmp_path)
        out = tmp_path / "macro"
        code = main(["evaluate", "--family", "SCNM", "--language", "en",
                     "--tag", "TRAD_TEXT", "--text-metric", "macro",
                     "--draws", *map(str, draw_paths),
                     "--generations", *map(str, gen_paths),
                     "--out", str(out)])
        assert code == 0
        report = read_json(out / "report.json")
        assert report["metadata"]["text_metric"] == "macro"
        assert report["summary"]["text"]["f1"]["mean"] == 1.0


class TestRunKv:
    def test_planted_comparison(self, tmp_path, capsys):
        _setup_dataset(tmp_path)
        out = tmp_path / "run"
        assert main(_run_kv_args(tmp_path, out)) == 0
        report = read_json(out / "kv_report.json")
        names = [row["name"] for row in report["rows"]]
        assert names == ["Origin KV", "WLI KV"]
        wli = report["rows"][1]["f1"]["mean"]
        origin = report["rows"][0]["f1"]["mean"]
        assert wli > origin
        config = read_json(out / "effective_config.json")
        assert config["few_shot_k"] == 5
        assert (out / "wli_kv.txt").exists()
        assert (out / "predictions_wli.draw0.jsonl").exists()

    def test_tconer_refused(self, tmp_path, capsys):
        _setup_dataset(tmp_path)
        code = main(_run_kv_args(tmp_path, tmp_path / "x")[:1] + [
            "--family", "TCONER", "--language", "en",
            "--train", str(tmp_path / "train.jsonl"),
            "--test", str(tmp_path / "test.jsonl"),
            "--external-kv", str(tmp_path / "origin_kv.txt"),
            "--out", str(tmp_path / "x"),
        ])
        assert code == 3
        assert "excluded from KV experiments" in capsys.readouterr().err

    def test_reruns_are_byte_identical(self, tmp_path):
        _setup_dataset(tmp_path)
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(_run_kv_args(tmp_path, out1)) == 0
        assert main(_run_kv_args(tmp_path, out2)) == 0
        files1 = sorted(p.relative_to(out1) for p in out1.rglob("*") if p.is_file())
        files2 = sorted(p.relative_to(out2) for p in out2.rglob("*") if p.is_file())
        assert files1 == files2
        for rel in files1:
            assert (out1 / rel).read_bytes() == (out2 / rel).read_bytes(), rel

    def test_config_file_with_flag_override(self, tmp_path):
        _setup_dataset(tmp_path)
        cfg = tmp_path / "cfg.json"
        write_json(cfg, {
            "family": "SCNM",
            "language": "en",
            "train_path": str(tmp_path / "train.jsonl"),
            "test_path": str(tmp_path / "test.jsonl"),
            "external_kv_path": str(tmp_path / "origin_kv.txt"),
            "few_shot_k": 7,
            "test_sample_size": 20,
            "test_repeats": 2,
            "kv_words_per_label": 10,
            "seed": 3,
        })
        out = tmp_path / "cfgrun"
        code = main(["run-kv", "--config", str(cfg), "--few-shot-k", "5",
                     "--out", str(out)])
        assert code == 0
        effective = read_json(out / "effective_config.json")
        assert effective["few_shot_k"] == 5  # flag wins
        assert effective["family"] == "SCNM"  # file value kept

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        write_json(cfg, {"familly": "SCNM"})
        assert main(["run-kv", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3

    def test_missing_external_kv_is_config_error(self, tmp_path, capsys):
        _setup_dataset(tmp_path)
        code = main(["run-kv", "--family", "SCNM", "--language", "en",
                     "--train", str(tmp_path / "train.jsonl"),
                     "--test", str(tmp_path / "test.jsonl"),
                     "--out", str(tmp_path / "nokv")])
        assert code == 3
        assert "external_kv_path" in capsys.readouterr().err


class TestReport:
    def test_ablation_grid(self, tmp_path):
        _setup_dataset(tmp_path)
        report_paths = []
        for tag in ("WO_TLI_TO_WLI", "WITH_TLI_TO_WLI", "WO_WLI_TO_TLI", "WITH_WLI_TO_TLI"):
            out = tmp_path / f"draws_{tag}"
            main(["build-formats", "--family", "SCNM", "--language", "en",
                  "--input", str(tmp_path / "test.jsonl"), "--role", "test",
                  "--tags", tag, "--test-n", "10", "--repeats", "2",
                  "--seed", "5", "--out", str(out)])
            name = f"scnm_en_{tag.lower()}.test"
            draws = [out / f"{name}.draw{d}.jsonl" for d in range(2)]
            gens = []
            for d, dp in enumerate(draws):
                gp = out / f"gen{d}.jsonl"
                write_jsonl(gp, [{"output": e.target} for e in read_examples(dp)])
                gens.append(gp)
            eval_out = tmp_path / f"eval_{tag}"
            main(["evaluate", "--family", "SCNM", "--language", "en", "--tag", tag,
                  "--draws", *map(str, draws), "--generations", *map(str, gens),
                  "--out", str(eval_out)])
            report_paths.append(eval_out / "report.json")
        out = tmp_path / "grid"
        code = main(["report", "--inputs", *map(str, report_paths), "--out", str(out)])
        assert code == 0
        md = (out / "ablation.md").read_text(encoding="utf-8")
        assert "w/o TLI" in md and "with WLI" in md
        assert md.count("100.00") == 4


class TestEnvDataRoot:
    def test_relative_paths_resolve_against_root(self, tmp_path, monkeypatch):
        _setup_dataset(tmp_path)
        monkeypatch.setenv("MREMIX_DATA_ROOT", str(tmp_path))
        code = main(["validate", "--family", "SCNM", "--language", "en", "train.jsonl"])
        assert code == 0

    def test_absolute_paths_untouched(self, tmp_path, monkeypatch):
        _setup_dataset(tmp_path)
        monkeypatch.setenv("MREMIX_DATA_ROOT", "/nonexistent")
        code = main(["validate", "--family", "SCNM", "--language", "en",
                     str(tmp_path / "train.jsonl")])
        assert code == 0


def test_module_entrypoint_subprocess(tmp_path):
    _setup_dataset(tmp_path)
    proc = subprocess.run(
        [sys.executable, "-m", "mremix", "validate", "--family", "scnm",
         "--language", "en", str(tmp_path / "train.jsonl")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "OK" in proc.stdout


def test_kernel_backends_yield_identical_artifacts(tmp_path):
    from mremix._kernels import CompiledCoocTable

    if CompiledCoocTable is None:
        pytest.skip("compiled kernel unavailable")
    _setup_dataset(tmp_path)
    outputs = {}
    for backend, force_pure in (("compiled", "0"), ("pure", "1")):
        out = tmp_path / backend
        env = {**os.environ, "MREMIX_PURE_KERNELS": force_pure}
        proc = subprocess.run(
            [sys.executable, "-m", "mremix", *_run_kv_args(tmp_path, out)],
            capture_output=True, text=True, env=env,
        )
        assert proc.returncode == 0, proc.stderr
        outputs[backend] = {
            str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()
        }
    # identical artifacts except the metadata honestly naming the active kernel
    for rel in outputs["compiled"]:
        if rel == "kv_report.json":
            continue
        assert outputs["compiled"][rel] == outputs["pure"][rel], rel
    reports = {
        backend: json.loads(tree["kv_report.json"]) for backend, tree in outputs.items()
    }
    assert reports["compiled"]["rows"] == reports["pure"]["rows"]
    for report in reports.values():
        report["metadata"]["provider"].pop("kernel_backend")
    assert reports["compiled"] == reports["pure"]
