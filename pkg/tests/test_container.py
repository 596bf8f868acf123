import io
import math

import numpy as np
import pytest

from hypc.codec import EncodeParams, decode_layer, encode_layer
from hypc.container import (
    CompressedModel,
    Tensor,
    TensorBundle,
    dump_hcmp,
    dump_ntb,
    load_hcmp,
    load_ntb,
    read_hcmp,
    read_ntb,
    write_hcmp,
    write_ntb,
)
from hypc.errors import FormatError


def random_bundle(rng, max_tensors=5, max_elems=40) -> TensorBundle:
    tensors = []
    for i in range(rng.integers(0, max_tensors + 1)):
        rank = int(rng.integers(0, 3))
        shape = tuple(int(d) for d in rng.integers(0, 5, size=rank))
        n = math.prod(shape)
        kind = rng.integers(0, 3)
        if kind == 0:
            data = np.full(n, 0.25, dtype=np.float32)  # constant
        else:
            data = (rng.random(n, dtype=np.float32) - np.float32(0.5))
        tensors.append(Tensor(f"t{i}", shape, data))
    return TensorBundle(tensors)


class TestNtb:
    def test_empty_bundle_is_eight_bytes(self):
        blob = dump_ntb(TensorBundle([]))
        assert blob == b"NTB1" + b"\x00\x00\x00\x00"
        assert len(blob) == 8

    def test_single_tensor_layout(self):
        blob = dump_ntb(TensorBundle([Tensor("w", (2,), np.array([1.0, 2.0]))]))
        # magic(4) count(4) namelen(2) name(1) rank(1) dim(8) dtype(1) payload(8)
        assert len(blob) == 29
        assert blob[:4] == b"NTB1"
        assert blob[-8:] == bytes.fromhex("0000803f00000040")

    def test_roundtrip_random_bundles(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            bundle = random_bundle(rng)
            blob = dump_ntb(bundle)
            back = load_ntb(blob)
            assert dump_ntb(back) == blob
            for a, b in zip(bundle.tensors, back.tensors):
                assert a.name == b.name and a.shape == b.shape
                assert a.data.tobytes() == b.data.tobytes()

    def test_file_and_stream_targets(self, tmp_path):
        bundle = TensorBundle([Tensor("w", (3,), np.arange(3, dtype=np.float32))])
        path = tmp_path / "x.ntb"
        write_ntb(bundle, path)
        assert read_ntb(path).get("w").data.tolist() == [0.0, 1.0, 2.0]
        buf = io.BytesIO()
        write_ntb(bundle, buf)
        assert buf.getvalue() == path.read_bytes()
        assert not list(tmp_path.glob("*.part"))

    def test_bad_magic(self):
        with pytest.raises(FormatError, match="offset 0"):
            load_ntb(b"XXXX\x00\x00\x00\x00")

    def test_truncation_names_offset(self):
        blob = dump_ntb(TensorBundle([Tensor("w", (2,), np.array([1.0, 2.0]))]))
        with pytest.raises(FormatError, match="offset"):
            load_ntb(blob[:-3])

    def test_trailing_garbage_rejected(self):
        blob = dump_ntb(TensorBundle([]))
        with pytest.raises(FormatError, match="trailing"):
            load_ntb(blob + b"\x00")

    def test_duplicate_names_rejected(self):
        blob = dump_ntb(TensorBundle([Tensor("w", (0,), np.zeros(0))]))
        # splice the single tensor record in twice and fix the count
        record = blob[8:]
        doubled = b"NTB1" + (2).to_bytes(4, "little") + record + record
        with pytest.raises(FormatError, match="duplicate"):
            load_ntb(doubled)

    def test_unknown_dtype_rejected(self):
        blob = bytearray(dump_ntb(TensorBundle([Tensor("w", (0,), np.zeros(0))])))
        blob[-1] = 7  # dtype tag is the last byte of an empty tensor record
        with pytest.raises(FormatError, match="dtype"):
            load_ntb(bytes(blob))


class TestHcmp:
    def encode_model(self, rng, lengths=(10, 7, 0, 1), params=EncodeParams()):
        layers = [
            encode_layer(rng.uniform(-0.6, 0.6, size=n), f"layer{i}", (n,), params)
            for i, n in enumerate(lengths)
        ]
        return CompressedModel(layers)

    def test_zero_layer_file_is_ten_bytes(self):
        blob = dump_hcmp(CompressedModel([]))
        assert len(blob) == 10
        assert blob == b"HCMP" + b"\x01\x00" + b"\x00\x00\x00\x00"

    def test_save_load_decode_bit_exact(self, tmp_path):
        rng = np.random.default_rng(1)
        model = self.encode_model(rng)
        path = tmp_path / "m.hcmp"
        write_hcmp(model, path)
        back = read_hcmp(path)
        assert dump_hcmp(back) == path.read_bytes()
        for ours, theirs in zip(model.layers, back.layers):
            assert ours == theirs
            assert decode_layer(ours).tobytes() == decode_layer(theirs).tobytes()

    def test_roundtrip_random_models(self):
        rng = np.random.default_rng(2)
        for trial in range(30):
            lengths = tuple(int(n) for n in rng.integers(0, 30, size=rng.integers(0, 4)))
            params = EncodeParams(
                box_side=float(rng.uniform(0.02, 0.5)),
                num_points=int(rng.integers(1, 400)),
                max_category=int(rng.integers(0, 5)) if rng.random() < 0.8 else 0,
            )
            if params.max_category == 0:
                params = EncodeParams(box_side=10.0, num_points=params.num_points,
                                      max_category=0)
            model = self.encode_model(rng, lengths, params)
            blob = dump_hcmp(model)
            assert dump_hcmp(load_hcmp(blob)) == blob

    def test_version_mismatch_rejected(self):
        blob = bytearray(dump_hcmp(CompressedModel([])))
        blob[4] = 9
        with pytest.raises(FormatError, match="version"):
            load_hcmp(bytes(blob))

    def test_truncation_rejected(self):
        rng = np.random.default_rng(3)
        blob = dump_hcmp(self.encode_model(rng))
        with pytest.raises(FormatError, match="offset"):
            load_hcmp(blob[:-1])

    def test_out_of_range_theta_detected_on_decode(self):
        # 256 points and 3 rings make the bound 1024 = 2**10, so any payload
        # bit pattern decodes; shrink the bound afterwards to force a bad theta
        rng = np.random.default_rng(4)
        enc = encode_layer(rng.uniform(-1, 1, 64), "w", (64,),
                           EncodeParams(num_points=256))
        assert enc.bit_width == 10
        blob = bytearray(dump_hcmp(CompressedModel([enc])))
        # patch max_category (u16) down to 0: bound becomes 256
        # header(10) name(2+1) shape(1+8) element_count(8) padded(1) box_side(8) u(4)
        offset = 10 + 3 + 9 + 9 + 8 + 4
        assert int.from_bytes(blob[offset:offset + 2], "little") == 3
        blob[offset:offset + 2] = (0).to_bytes(2, "little")
        model = load_hcmp(bytes(blob))
        with pytest.raises(FormatError, match="theta"):
            decode_layer(model.layers[0])

    def test_corrupted_byte_has_local_blast_radius(self):
        rng = np.random.default_rng(5)
        weights = rng.uniform(-1, 1, size=4000)
        enc = encode_layer(weights, "w", (4000,), EncodeParams(num_points=256))
        assert enc.config.theta_bound == 1024 and enc.bit_width == 10
        clean = decode_layer(enc)
        blob = bytearray(dump_hcmp(CompressedModel([enc])))
        payload_at = len(blob) - len(enc.payload)
        blob[payload_at + 100] ^= 0xFF
        corrupted = decode_layer(load_hcmp(bytes(blob)).layers[0])
        changed_groups = np.unique(
            np.nonzero(corrupted != clean)[0] // 2
        )
        assert 1 <= changed_groups.size <= math.ceil(8 / enc.bit_width) + 1

    def test_payload_length_mismatch_rejected(self):
        rng = np.random.default_rng(6)
        enc = encode_layer(rng.uniform(-1, 1, 10), "w", (10,), EncodeParams())
        blob = bytearray(dump_hcmp(CompressedModel([enc])))
        # stored payload length disagrees with group_count * bit_width
        length_at = len(blob) - len(enc.payload) - 8
        stored = int.from_bytes(blob[length_at:length_at + 8], "little")
        assert stored == len(enc.payload)
        blob[length_at:length_at + 8] = (stored - 1).to_bytes(8, "little")
        with pytest.raises(FormatError):
            load_hcmp(bytes(blob))
