import json

import numpy as np
import pytest

from stoqbench import Gate, VerifierCircuit, load, save_circuit
from stoqbench.cli import EXIT_ERROR, EXIT_OK, EXIT_PROMISE, main

SAT_3 = "p cnf 3 3\n1 2 0\n-1 3 0\n2 -3 0\n"
UNSAT_2 = "p cnf 2 4\n1 2 0\n-1 2 0\n1 -2 0\n-1 -2 0\n"
UNSAT_BIASED = "p cnf 3 4\n1 3 0\n1 -3 0\n2 3 0\n2 -3 0\n"


def write(path, text):
    path.write_text(text)
    return str(path)


@pytest.fixture
def sat_instance(tmp_path):
    dimacs = write(tmp_path / "f.cnf", SAT_3)
    out = str(tmp_path / "inst.json")
    assert main(["gen", "from-dimacs", "--dimacs", dimacs, "--out", out]) \
        == EXIT_OK
    return out


class TestGen:
    def test_from_dimacs_writes_instance_and_manifest(self, sat_instance):
        inst = load(sat_instance)
        assert inst.n == 3 and inst.m == 3
        manifest = json.loads(open(sat_instance + ".manifest.json").read())
        assert manifest["tool"] == "stoqbench"
        assert len(manifest["inputs"]) == 1

    def test_random_deterministic(self, tmp_path):
        a, b = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        for out in (a, b):
            assert main(["gen", "random", "--n", "4", "--k", "2",
                         "--terms", "3", "--seed", "5", "--out", out]) == EXIT_OK
        assert open(a).read() == open(b).read()

    def test_cnf_ensemble(self, tmp_path):
        cnf = write(tmp_path / "e.cnf", UNSAT_BIASED)
        out = str(tmp_path / "ens.json")
        assert main(["gen", "cnf-ensemble", "--cnf", cnf, "--q-vars", "3",
                     "--out", out]) == EXIT_OK
        ens = load(out)
        assert ens.n == 2 and ens.m == 1

    def test_missing_file_is_error(self, tmp_path):
        assert main(["gen", "from-dimacs", "--dimacs",
                     str(tmp_path / "nope.cnf"),
                     "--out", str(tmp_path / "o.json")]) == EXIT_ERROR


class TestPipeline:
    def test_prove_then_verify_sat(self, sat_instance, tmp_path):
        wit = str(tmp_path / "wit.json")
        assert main(["prove", "--instance", sat_instance, "--out", wit]) \
            == EXIT_OK
        doc = json.loads(open(wit).read())
        assert not doc["looks_unsat"]
        out = str(tmp_path / "verify.csv")
        assert main(["verify", "--instance", sat_instance, "--witness", wit,
                     "--trials", "20", "--seed", "1", "--out", out]) == EXIT_OK
        lines = open(out).read().splitlines()
        assert lines[0].startswith("trial,accepted")
        rate_row = [l for l in lines if l.startswith("rate")][0]
        assert rate_row.split(",")[1] == "1"

    def test_prove_unsat_returns_promise_code(self, tmp_path):
        dimacs = write(tmp_path / "u.cnf", UNSAT_2)
        inst = str(tmp_path / "u.json")
        main(["gen", "from-dimacs", "--dimacs", dimacs, "--out", inst])
        wit = str(tmp_path / "wit.json")
        assert main(["prove", "--instance", inst, "--out", wit]) \
            == EXIT_PROMISE
        assert json.loads(open(wit).read())["looks_unsat"]

    def test_verify_literal_witness_and_transcripts(self, sat_instance,
                                                    tmp_path):
        out = str(tmp_path / "v.csv")
        logs = str(tmp_path / "t.jsonl")
        assert main(["verify", "--instance", sat_instance, "--witness", "0b110",
                     "--trials", "5", "--seed", "0", "--out", out,
                     "--transcripts", logs]) == EXIT_OK
        records = [json.loads(l) for l in open(logs).read().splitlines()]
        assert len(records) == 5
        assert all(r["accepted"] for r in records)

    def test_spectrum_of_instance(self, sat_instance, tmp_path):
        out = str(tmp_path / "s.csv")
        assert main(["spectrum", "--instance", sat_instance, "--out", out]) \
            == EXIT_OK
        rows = dict(l.split(",")[:2] for l in
                    open(out).read().splitlines()[1:])
        assert float(rows["max"]) == pytest.approx(1.0, abs=1e-12)
        assert 0.0 <= float(rows["min"]) <= 1.0


class TestCompile:
    def circuit_path(self, tmp_path):
        v = VerifierCircuit(n=0, n_w=0, n_0=0, n_plus=1,
                            gates=(Gate("X", (0,)), Gate("X", (0,))))
        path = str(tmp_path / "circ.json")
        save_circuit(v, path)
        return path

    def test_compile_clock_and_spectrum(self, tmp_path):
        circ = self.circuit_path(tmp_path)
        out = str(tmp_path / "clock.json")
        assert main(["compile", "--circuit", circ, "--to", "clock",
                     "--out", out]) == EXIT_OK
        s = str(tmp_path / "spec.csv")
        assert main(["spectrum", "--instance", out, "--out", s]) == EXIT_OK
        rows = dict(l.split(",")[:2] for l in open(s).read().splitlines()[1:])
        assert abs(float(rows["min"])) <= 1e-10

    def test_compile_6sat_then_verify(self, tmp_path):
        circ = self.circuit_path(tmp_path)
        out = str(tmp_path / "sat.json")
        assert main(["compile", "--circuit", circ, "--to", "6sat",
                     "--out", out]) == EXIT_OK
        inst = load(out)
        assert inst.epsilon == 1.0  # accepting circuit exports a yes-instance
        v = str(tmp_path / "v.csv")
        wit = str(tmp_path / "wit.json")
        assert main(["prove", "--instance", out, "--out", wit]) == EXIT_OK
        assert main(["verify", "--instance", out, "--witness", wit,
                     "--trials", "10", "--seed", "2", "--out", v]) == EXIT_OK
        rate_row = [l for l in open(v).read().splitlines()
                    if l.startswith("rate")][0]
        assert rate_row.split(",")[1] == "1"

    def test_compile_verifier_from_lhmin(self, tmp_path):
        from stoqbench import LhMinInstance, LocalOperator, save
        x = np.array([[0.0, -1.0], [-1.0, 0.0]])
        inst = LhMinInstance(1, (LocalOperator((0,), x),), -1.0 - 1e-6, 0.0)
        path = str(tmp_path / "h.json")
        save(inst, path)
        out = str(tmp_path / "ver.json")
        assert main(["compile", "--instance", path, "--to", "verifier",
                     "--out", out]) == EXIT_OK
        doc = json.loads(open(out).read())
        assert doc["kind"] == "mixed-verifier"
        assert sum(p["p"] for p in doc["parts"]) == pytest.approx(1.0)


class TestTraceAndEnsemble:
    def lhmin_path(self, tmp_path):
        from stoqbench import LhMinInstance, LocalOperator, save
        x = np.array([[0.0, -1.0], [-1.0, 0.0]])
        inst = LhMinInstance(1, (LocalOperator((0,), x),), -1.0 - 1e-6, 0.0)
        path = str(tmp_path / "h.json")
        save(inst, path)
        return path

    def test_trace_exact(self, tmp_path):
        out = str(tmp_path / "tr.csv")
        assert main(["trace", "--instance", self.lhmin_path(tmp_path),
                     "--power", "2", "--out", out]) == EXIT_OK
        row = open(out).read().splitlines()[1].split(",")
        assert float(row[1]) == pytest.approx(5.0 / 9.0)
        assert row[3] == "exact"

    def ensemble_path(self, tmp_path):
        cnf = write(tmp_path / "e.cnf", UNSAT_BIASED)
        out = str(tmp_path / "ens.json")
        main(["gen", "cnf-ensemble", "--cnf", cnf, "--q-vars", "3",
              "--out", out])
        return out

    def test_ensemble_stats_deterministic(self, tmp_path):
        ens = self.ensemble_path(tmp_path)
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        for out in (a, b):
            assert main(["ensemble", "--instance", ens, "--samples", "50",
                         "--seed", "4", "--out", out]) == EXIT_OK
        assert open(a).read() == open(b).read()
        lines = open(a).read().splitlines()
        assert lines[0] == "sample_index,r,lambda"

    def test_ensemble_decide_yes(self, tmp_path):
        # all realizations satisfiable: lambda identically 0
        ens = self.ensemble_path(tmp_path)
        out = str(tmp_path / "d.csv")
        assert main(["ensemble", "--instance", ens, "--samples", "60",
                     "--seed", "0", "--decide", "--lambda-yes", "1e-9",
                     "--lambda-no", "0.5", "--out", out]) == EXIT_OK
        assert "decision,,yes" in open(out).read()

    def test_ensemble_decide_inconclusive_code(self, tmp_path):
        # thresholds placed so the zero lambda falls between them
        ens = self.ensemble_path(tmp_path)
        out = str(tmp_path / "d.csv")
        assert main(["ensemble", "--instance", ens, "--samples", "40",
                     "--seed", "0", "--decide", "--lambda-yes", "-2.0",
                     "--lambda-no", "2.0", "--out", out]) == EXIT_PROMISE
        assert "decision,,inconclusive" in open(out).read()


class TestRobustness:
    def test_wrong_instance_kind(self, sat_instance, tmp_path):
        assert main(["trace", "--instance", sat_instance,
                     "--out", str(tmp_path / "t.csv")]) == EXIT_ERROR

    def test_corrupt_json(self, tmp_path):
        bad = write(tmp_path / "bad.json", "{not json")
        assert main(["spectrum", "--instance", bad,
                     "--out", str(tmp_path / "s.csv")]) == EXIT_ERROR
