import json

import numpy as np
import pytest

from twirlkit.channels import PauliChannel, depolarizing_product, engineered_channel
from twirlkit.cli import main
from twirlkit.fileio import (
    DataFormatError,
    load_channel,
    read_trials,
    save_channel,
    write_trials,
)
from twirlkit.protocol import ProtocolConfig, SpamModel, simulate_ensemble, simulate_standard


def write_config(path, **overrides):
    doc = {
        "format_version": 1,
        "n": 2,
        "channel": {"format_version": 1, "kind": "fixture", "fixture_id": "chcl3_zz", "n": 2},
        "variant": "standard",
        "trials": 200,
        "master_seed": 5,
        "output": str(path.parent / "trials.jsonl"),
    }
    doc.update(overrides)
    path.write_text(json.dumps(doc))
    return doc


class TestChannelFiles:
    def test_pauli_round_trip(self, tmp_path):
        ch = depolarizing_product([0.1, 0.3])
        f = tmp_path / "ch.json"
        save_channel(f, ch)
        back = load_channel(f)
        assert isinstance(back, PauliChannel)
        for key, v in ch.terms.items():
            assert back.terms[key] == pytest.approx(v)

    def test_kraus_round_trip(self, tmp_path):
        k = engineered_channel("chcl3_unitary")
        f = tmp_path / "k.json"
        save_channel(f, k)
        back = load_channel(f)
        assert np.allclose(back.operators[0], k.operators[0])

    def test_fixture_doc(self, tmp_path):
        f = tmp_path / "fix.json"
        f.write_text(json.dumps({"format_version": 1, "kind": "fixture",
                                 "fixture_id": "malonic_z_mix", "n": 3}))
        assert load_channel(f).n == 3

    def test_version_mismatch_rejected(self, tmp_path):
        f = tmp_path / "bad.json"
        f.write_text(json.dumps({"format_version": 99, "kind": "pauli", "n": 1,
                                 "terms": [{"pauli": "I", "prob": 1.0}]}))
        with pytest.raises(DataFormatError):
            load_channel(f)


class TestTrialFiles:
    def test_standard_round_trip(self, tmp_path):
        ch = depolarizing_product([0.2, 0.4])
        spam = SpamModel.uniform(2, 0.01, 0.02)
        out = simulate_standard(
            ProtocolConfig(n=2, channel=ch, trials=50, master_seed=3, spam_model=spam)
        )
        f = tmp_path / "t.jsonl"
        write_trials(f, out)
        header, sets = read_trials(f)
        assert header["master_seed"] == 3
        assert len(sets) == 1
        back = sets[0]
        assert np.array_equal(back.outcomes, out.outcomes)
        assert np.array_equal(back.clifford_ids, out.clifford_ids)
        assert np.array_equal(back.trial_indices, out.trial_indices)
        assert np.allclose(back.spam_model.prep, spam.prep)

    def test_ensemble_round_trip(self, tmp_path):
        ch = depolarizing_product([0.2, 0.4, 0.1])
        cfg = ProtocolConfig(n=3, channel=ch, trials=30, master_seed=9, variant="ensemble")
        sets = [simulate_ensemble(cfg, w) for w in (1, 2, 3)]
        f = tmp_path / "e.jsonl"
        write_trials(f, sets)
        _, back = read_trials(f)
        assert [s.z_weight for s in back] == [1, 2, 3]
        for orig, loaded in zip(sets, back):
            assert np.array_equal(orig.outcomes, loaded.outcomes)
            assert np.array_equal(orig.permutations, loaded.permutations)

    def test_byte_identical_rewrites(self, tmp_path):
        ch = depolarizing_product([0.2, 0.4])
        out = simulate_standard(ProtocolConfig(n=2, channel=ch, trials=40, master_seed=3))
        f1, f2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_trials(f1, out)
        write_trials(f2, out)
        assert f1.read_bytes() == f2.read_bytes()

    def test_rejects_garbage(self, tmp_path):
        f = tmp_path / "g.jsonl"
        f.write_text("not json\n")
        with pytest.raises(DataFormatError):
            read_trials(f)


class TestCli:
    def test_omega_prints_rational(self, capsys):
        assert main(["omega", "--n", "2"]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert out[0].split() == ["1", "1", "1"]
        assert out[1].split() == ["1", "1/3", "-1/3"]

    def test_omega_inverse_decimal(self, capsys):
        assert main(["omega", "--n", "2", "--inverse", "--format", "decimal"]) == 0
        rows = capsys.readouterr().out.strip().splitlines()
        assert float(rows[0].split()[0]) == pytest.approx(1 / 16)

    def test_samplesize(self, capsys):
        assert main(["samplesize", "--delta", "0.05", "--epsilon", "0.05", "--n", "3"]) == 0
        assert capsys.readouterr().out.strip() == "2030"
        assert main(["samplesize", "--delta", "0.05", "--epsilon", "0.05", "--single"]) == 0
        assert capsys.readouterr().out.strip() == "1476"

    def test_usage_error_exit_code(self, capsys):
        assert main(["omega"]) == 1
        assert main(["nonsense"]) == 1

    def test_simulate_estimate_pipeline(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        write_config(cfg_path, trials=3000)
        assert main(["simulate", "--config", str(cfg_path)]) == 0
        trials = tmp_path / "trials.jsonl"
        assert trials.exists()

        report = tmp_path / "report.json"
        assert main(["estimate", "--trials", str(trials), "--method", "mle",
                     "--report", str(report)]) == 0
        doc = json.loads(report.read_text())
        # fixture is the pure two-qubit correlated phase error: p = [0, 0, 1]
        assert np.allclose(doc["p_mle"], [0, 0, 1], atol=0.02)
        assert "contours" in doc and len(doc["contours"]) == 3

    def test_simulate_deterministic_files(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        write_config(cfg_path, trials=500)
        assert main(["simulate", "--config", str(cfg_path)]) == 0
        first = (tmp_path / "trials.jsonl").read_bytes()
        assert main(["simulate", "--config", str(cfg_path)]) == 0
        assert (tmp_path / "trials.jsonl").read_bytes() == first

    def test_diagnose_scaling_pass_and_fail(self, tmp_path):
        # product channel passes, correlated channel fails with exit 3
        for name, channel_doc, want in [
            ("dep", {"format_version": 1, "kind": "pauli", "n": 2,
                     "terms": [{"pauli": t, "prob": p} for t, p in
                               [("II", 0.64), ("IX", 0.8 * 0.2 / 3), ("IY", 0.8 * 0.2 / 3),
                                ("IZ", 0.8 * 0.2 / 3), ("XI", 0.2 * 0.8 / 3),
                                ("YI", 0.2 * 0.8 / 3), ("ZI", 0.2 * 0.8 / 3),
                                ("XX", 0.04 / 9), ("XY", 0.04 / 9), ("XZ", 0.04 / 9),
                                ("YX", 0.04 / 9), ("YY", 0.04 / 9), ("YZ", 0.04 / 9),
                                ("ZX", 0.04 / 9), ("ZY", 0.04 / 9), ("ZZ", 0.04 / 9)]]},
             0),
            ("corr", {"format_version": 1, "kind": "pauli", "n": 2,
                      "terms": [{"pauli": "II", "prob": 0.8}, {"pauli": "ZZ", "prob": 0.2}]},
             3),
        ]:
            cfg_path = tmp_path / f"cfg_{name}.json"
            write_config(cfg_path, channel=channel_doc, trials=100_000,
                         output=str(tmp_path / f"t_{name}.jsonl"))
            assert main(["simulate", "--config", str(cfg_path)]) == 0
            report = tmp_path / f"r_{name}.json"
            assert main(["estimate", "--trials", str(tmp_path / f"t_{name}.jsonl"),
                         "--method", "linear", "--report", str(report)]) == 0
            code = main(["diagnose", "--report", str(report), "--test", "scaling"])
            assert code == want
            doc = json.loads(report.read_text())
            assert doc["diagnostics"][0]["test"] == "scaling"

    def test_diagnose_markov(self, tmp_path):
        from twirlkit.channels import compose, weight_distribution
        from twirlkit.fileio import save_channel
        from twirlkit.twirl import symmetrized_channel

        tau = symmetrized_channel(2, [0.7, 0.2, 0.1])
        two = compose(tau, tau)
        for name, ch in [("tau", tau), ("2tau", two)]:
            ch_file = tmp_path / f"ch_{name}.json"
            save_channel(ch_file, ch)
            cfg_path = tmp_path / f"cfg_{name}.json"
            write_config(cfg_path, channel={"file": ch_file.name}, trials=100_000,
                         master_seed=60 if name == "tau" else 61,
                         output=str(tmp_path / f"t_{name}.jsonl"))
            assert main(["simulate", "--config", str(cfg_path)]) == 0
            assert main(["estimate", "--trials", str(tmp_path / f"t_{name}.jsonl"),
                         "--method", "linear",
                         "--report", str(tmp_path / f"r_{name}.json")]) == 0
        code = main(["diagnose", "--report", str(tmp_path / "r_tau.json"),
                     "--report2", str(tmp_path / "r_2tau.json"),
                     "--test", "markov", "--m", "2"])
        assert code == 0

    def test_plotdata_kinds(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        write_config(cfg_path, trials=4000,
                     channel={"format_version": 1, "kind": "fixture",
                              "fixture_id": "chcl3_unitary", "n": 2})
        assert main(["simulate", "--config", str(cfg_path)]) == 0
        report = tmp_path / "report.json"
        assert main(["estimate", "--trials", str(tmp_path / "trials.jsonl"),
                     "--method", "mle", "--report", str(report)]) == 0

        contours = tmp_path / "contours.csv"
        assert main(["plotdata", "--report", str(report), "--kind", "contours",
                     "--out", str(contours)]) == 0
        rows = contours.read_text().strip().splitlines()
        assert rows[0] == "level,point,p0,p1,p2"
        levels = {row.split(",")[0] for row in rows[1:]}
        assert levels == {"0.68", "0.95", "0.99"}

        weights = tmp_path / "weights.csv"
        assert main(["plotdata", "--report", str(report), "--kind", "weights",
                     "--out", str(weights)]) == 0
        wrows = weights.read_text().strip().splitlines()
        assert wrows[0] == "w,p_w,sigma_w"
        assert len(wrows) == 4

        scaling = tmp_path / "scaling.csv"
        assert main(["plotdata", "--report", str(report), "--kind", "c-scaling",
                     "--out", str(scaling)]) == 0
        srows = scaling.read_text().strip().splitlines()
        assert srows[0] == "w,c_w,c1_pow_w"

    def test_estimate_with_reference(self, tmp_path):
        ch_doc = {"format_version": 1, "kind": "fixture", "fixture_id": "chcl3_unitary", "n": 2}
        spam = {"prep": 0.05, "meas": 0.05}
        cfg_noise = tmp_path / "cfg_noise.json"
        write_config(cfg_noise, channel=ch_doc, trials=60_000, spam=spam,
                     output=str(tmp_path / "noise.jsonl"))
        cfg_ref = tmp_path / "cfg_ref.json"
        write_config(cfg_ref, trials=60_000, spam=spam, master_seed=77,
                     channel={"format_version": 1, "kind": "pauli", "n": 2,
                              "terms": [{"pauli": "II", "prob": 1.0}]},
                     output=str(tmp_path / "ref.jsonl"))
        assert main(["simulate", "--config", str(cfg_noise)]) == 0
        assert main(["simulate", "--config", str(cfg_ref)]) == 0
        report = tmp_path / "r.json"
        assert main(["estimate", "--trials", str(tmp_path / "noise.jsonl"),
                     "--reference", str(tmp_path / "ref.jsonl"),
                     "--method", "linear", "--report", str(report)]) == 0
        doc = json.loads(report.read_text())
        assert doc["normalized"]
        assert np.allclose(doc["p_linear"], [0.25, 0.5, 0.25], atol=0.02)

    def test_missing_file_data_error(self, tmp_path):
        assert main(["estimate", "--trials", str(tmp_path / "nope.jsonl"),
                     "--report", str(tmp_path / "r.json")]) == 2


class TestEnsembleCli:
    def test_ensemble_simulate_estimate(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        write_config(
            cfg_path,
            variant="ensemble",
            trials=30_000,
            channel={"format_version": 1, "kind": "fixture",
                     "fixture_id": "chcl3_unitary", "n": 2},
        )
        # ensemble simulation needs a Pauli channel: fixtures are Kraus, so
        # decompose first and write the channel file explicitly
        from twirlkit.channels import pauli_decompose
        from twirlkit.fileio import save_channel

        ch = pauli_decompose(engineered_channel("chcl3_unitary"))
        ch_file = tmp_path / "ch.json"
        save_channel(ch_file, ch)
        write_config(cfg_path, variant="ensemble", trials=30_000,
                     channel={"file": "ch.json"})
        assert main(["simulate", "--config", str(cfg_path)]) == 0
        header, sets = read_trials(tmp_path / "trials.jsonl")
        assert header["variant"] == "ensemble"
        assert [s.z_weight for s in sets] == [1, 2]

        report = tmp_path / "r.json"
        assert main(["estimate", "--trials", str(tmp_path / "trials.jsonl"),
                     "--method", "mle", "--report", str(report)]) == 0
        doc = json.loads(report.read_text())
        assert np.allclose(doc["p_mle"], [0.25, 0.5, 0.25], atol=0.03)
