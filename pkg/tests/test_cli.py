"""
Tests for the command line interface.
"""
import io
import json

import pandas as pd
import pytest

from ssbgp.backend import g1_identity, pubkey_serialize
from ssbgp.cli import bench_frame, check_vectors, main, make_vectors
from ssbgp.ecs import ChainLink, decode_chain, encode_chain, seq_append


class TestRun:
    """Tests for simulating scenarios."""

    def test_bgp_truncation(self, tmp_path):
        out = tmp_path / "metrics.json"
        assert main(["run", "fig1_bgp_truncation", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["nodes"]["D"]["table"]["A"]["next_hop"] == "F"

    def test_ssbgp_truncation(self, tmp_path):
        out = tmp_path / "metrics.json"
        assert main(["run", "fig1_ssbgp_truncation", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["nodes"]["D"]["table"]["A"]["next_hop"] == "C"
        bad = [
            x for x in doc["rejections"] if x["node"] == "D" and x["kind"] == "BadSignature"
        ]
        assert len(bad) == 1

    def test_missing_file(self, capsys):
        assert main(["run", "does_not_exist.json"]) == 2
        assert "not a valid scenario" in capsys.readouterr().err

    def test_nothing_to_run(self, capsys):
        assert main(["run"]) == 2

    def test_csv(self, capsys):
        assert main(["run", "fig1_bgp", "--format", "csv"]) == 0
        df = pd.read_csv(io.StringIO(capsys.readouterr().out))
        assert set(df["scenario"]) == {"fig1_bgp"}
        assert len(df) == 8

    def test_random_with_plot(self, tmp_path):
        plot = tmp_path / "net.png"
        out = tmp_path / "metrics.json"
        args = ["run", "--random", "4", "--protocol", "BGP", "--plot", str(plot)]
        assert main(args + ["--out", str(out)]) == 0
        assert plot.exists()
        assert json.loads(out.read_text())["protocol"] == "BGP"


class TestVector:
    """Tests for writing and checking test vectors."""

    @pytest.fixture(scope="class")
    def vectors(self):
        return make_vectors(2, seed=0)

    def test_stable(self, tmp_path):
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["vector", "--count", "2", "--seed", "0", "--out", str(first)]) == 0
        assert main(["vector", "--count", "2", "--seed", "0", "--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()
        assert main(["vector", "--check", str(first)]) == 0

    def test_vectors_verify(self, vectors):
        assert [x["n"] for x in vectors["vectors"]] == [1, 2]
        assert check_vectors(vectors) == []

    def test_tampered_vector(self, vectors, tmp_path):
        doc = json.loads(json.dumps(vectors))
        doc["vectors"][1]["messages"][0] = b"forged".hex()
        assert check_vectors(doc) == [1]
        path = tmp_path / "tampered.json"
        path.write_text(json.dumps(doc))
        assert main(["vector", "--check", str(path)]) == 2

    def test_corrupt_chain(self, vectors):
        doc = json.loads(json.dumps(vectors))
        doc["vectors"][0]["chain"] = doc["vectors"][0]["chain"][:-2]
        assert check_vectors(doc) == [0]

    def test_identity_link_rejected(self, vectors):
        """A link under the identity key leaves sigma unchanged but is caught."""
        doc = json.loads(json.dumps(vectors))
        vector = doc["vectors"][0]
        seq, sig = decode_chain(bytes.fromhex(vector["chain"]))
        forged = seq_append(seq, ChainLink(message=b"forged", pubkey=g1_identity()))
        vector["chain"] = encode_chain(forged, sig).hex()
        vector["messages"].append(b"forged".hex())
        vector["public_keys"].append(pubkey_serialize(g1_identity()).hex())
        assert check_vectors(doc) == [0]


class TestOptions:
    """Tests for options shared between subcommands."""

    @pytest.mark.parametrize("command", ["vector", "game", "keygen"])
    def test_format_only_where_used(self, command, capsys):
        with pytest.raises(SystemExit) as e:
            main([command, "--format", "csv"])
        assert e.value.code == 2
        assert "unrecognized arguments" in capsys.readouterr().err


class TestGame:
    """Tests for the game subcommand."""

    def test_all_lose(self, capsys):
        assert main(["game", "--n", "3"]) == 0
        out = capsys.readouterr().out
        assert out.count("result: LOSE") == 4
        assert "result: WIN" not in out

    def test_strip_transcript(self, capsys):
        assert main(["game", "--n", "3", "--extr", "001", "--adversary", "strip"]) == 0
        out = capsys.readouterr().out
        assert "verify: VALID" in out
        assert "clause 3 fails" in out

    def test_unknown_adversary(self, capsys):
        assert main(["game", "--adversary", "nobody"]) == 2
        assert "unknown adversary" in capsys.readouterr().err


class TestKeygen:
    def test_seeded(self, capsys):
        assert main(["keygen", "--seed", "1", "--count", "2"]) == 0
        first = json.loads(capsys.readouterr().out)
        assert main(["keygen", "--seed", "1", "--count", "2"]) == 0
        assert json.loads(capsys.readouterr().out) == first
        assert len(first) == 2
        assert len(bytes.fromhex(first[0]["public_key"])) == 144


class TestBench:
    """Tests for the benchmark table."""

    def test_cli_csv(self, capsys):
        args = ["bench", "--max-n", "2", "--iterations", "1", "--warmup", "0"]
        assert main(args) == 0
        df = pd.read_csv(io.StringIO(capsys.readouterr().out))
        assert list(df["n"]) == [1]
        assert {"sign_median_s", "verify_median_s", "verify_fit_s"} <= set(df.columns)

    def test_one_row_per_size(self):
        df = bench_frame(max_n=3, iterations=1, warmup=0, sizes=(1, 2, 3))
        assert list(df["n"]) == [1, 2, 3]
        assert (df["verify_median_s"] > 0).all()

    def test_bad_max_n(self, capsys):
        assert main(["bench", "--max-n", "0"]) == 2
