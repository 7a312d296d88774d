import json

import numpy as np
import pytest

from comatch import io
from comatch.errors import TensorFormatError


class TestTSR1:
    def test_round_trip(self, tmp_path, rng):
        a = rng.standard_normal((3, 4, 5)).astype(np.float32)
        io.save_tsr1(tmp_path / "a.tsr", a)
        np.testing.assert_array_equal(io.load_tsr1(tmp_path / "a.tsr"), a)

    def test_layout(self):
        buf = io.encode_tsr1(np.array([[1.0, 2.0]], np.float32))
        assert buf[:4] == b"TSR1"
        assert buf[4:8] == (2).to_bytes(4, "little")
        assert buf[8:16] == (1).to_bytes(4, "little") + (2).to_bytes(4, "little")
        np.testing.assert_array_equal(np.frombuffer(buf[16:], "<f4"), [1.0, 2.0])

    def test_scalar_and_empty(self, tmp_path):
        for a in (np.float32(3.5), np.zeros((0, 4), np.float32)):
            io.save_tsr1(tmp_path / "x.tsr", a)
            np.testing.assert_array_equal(io.load_tsr1(tmp_path / "x.tsr"), a)

    @pytest.mark.parametrize(
        "mangle, where",
        [
            (lambda b: b"XSR1" + b[4:], "offset 0"),
            (lambda b: b[:6], "offset 4"),
            (lambda b: b[:-3], "offset 16"),
            (lambda b: b + b"\0", "offset 40"),
        ],
    )
    def test_corruption_names_offset(self, tmp_path, mangle, where):
        p = tmp_path / "bad.tsr"
        p.write_bytes(mangle(io.encode_tsr1(np.zeros((2, 3), np.float32))))
        with pytest.raises(TensorFormatError, match=where):
            io.load_tsr1(p)

    def test_bundle(self, tmp_path, rng):
        t = {"b/w": rng.standard_normal((2, 2)).astype(np.float32), "a": np.ones(3, np.float32)}
        io.save_bundle(tmp_path / "m", t, {"d": 4})
        back, meta = io.load_bundle(tmp_path / "m")
        assert meta == {"d": 4}
        assert sorted(back) == ["a", "b/w"]
        np.testing.assert_array_equal(back["b/w"], t["b/w"])
        manifest = json.loads((tmp_path / "m" / "manifest.json").read_text())
        assert [e["name"] for e in manifest["tensors"]] == ["a", "b/w"]


class TestPGM:
    def test_round_trip(self, tmp_path, rng):
        img = rng.random((6, 9)).astype(np.float32)
        io.write_pgm(tmp_path / "i.pgm", img)
        back = io.read_pgm(tmp_path / "i.pgm")
        assert back.shape == (6, 9)
        np.testing.assert_allclose(back, np.rint(img * 255) / 255, atol=1e-7)

    def test_header_and_rounding(self, tmp_path):
        io.write_pgm(tmp_path / "i.pgm", np.array([[0.0, 0.5, 1.0, 0.502]]))
        buf = (tmp_path / "i.pgm").read_bytes()
        assert buf.startswith(b"P5\n4 1\n255\n")
        assert list(buf[-4:]) == [0, 128, 255, 128]

    def test_comments(self, tmp_path):
        (tmp_path / "c.pgm").write_bytes(b"P5\n# made by hand\n2 1\n255\n\x00\xff")
        np.testing.assert_array_equal(io.read_pgm(tmp_path / "c.pgm"), [[0.0, 1.0]])

    def test_rejects_ascii_and_truncation(self, tmp_path):
        (tmp_path / "a.pgm").write_bytes(b"P2\n1 1\n255\n0\n")
        with pytest.raises(TensorFormatError):
            io.read_pgm(tmp_path / "a.pgm")
        (tmp_path / "t.pgm").write_bytes(b"P5\n4 4\n255\n\x00")
        with pytest.raises(TensorFormatError, match="offset"):
            io.read_pgm(tmp_path / "t.pgm")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            io.read_pgm(tmp_path / "nope.pgm")


class TestMatchesCSV:
    def test_round_trip(self, tmp_path, rng):
        xa, xb, s = rng.random((4, 2)) * 100, rng.random((4, 2)) * 100, rng.random(4)
        io.write_matches_csv(tmp_path / "m.csv", xa, xb, s)
        assert (tmp_path / "m.csv").read_text().splitlines()[0] == "xA,yA,xB,yB,score"
        a, b, sc = io.read_matches_csv(tmp_path / "m.csv")
        np.testing.assert_allclose(a, xa, atol=1e-6)
        np.testing.assert_allclose(b, xb, atol=1e-6)
        np.testing.assert_allclose(sc, s, atol=1e-6)

    def test_json_is_sorted(self, tmp_path):
        io.write_json(tmp_path / "s.json", {"b": 1, "a": 2})
        assert (tmp_path / "s.json").read_text().index('"a"') < (tmp_path / "s.json").read_text().index('"b"')
