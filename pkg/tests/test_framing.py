"""Link-layer frame codec: sync + 12-bit payload + odd parity."""

import pytest

from gyromodem.framing import (
    FRAME_BITS,
    PAYLOAD_BITS,
    SYNC_PATTERN,
    FrameLengthError,
    compute_parity,
    decode_frame,
    encode_frame,
    int_to_payload,
    segment_payloads,
)

# reference frame: this payload is published with parity bit 1, which pins
# the polarity to odd parity (payload plus parity carries an odd ones count)
KNOWN_PAYLOAD = tuple(int(b) for b in "110100110100")


class TestComputeParity:
    def test_published_frame_polarity(self):
        assert sum(KNOWN_PAYLOAD) == 6
        assert compute_parity(KNOWN_PAYLOAD) == 1

    def test_zero_payload(self):
        assert compute_parity((0,) * 12) == 1

    def test_all_ones(self):
        assert compute_parity((1,) * 12) == 1

    def test_single_one(self):
        assert compute_parity((1,) + (0,) * 11) == 0

    def test_matches_popcount_oracle(self):
        for value in range(0, 4096, 37):
            payload = int_to_payload(value)
            total = bin(value).count("1") + compute_parity(payload)
            assert total % 2 == 1

    def test_wrong_length_rejected(self):
        with pytest.raises(FrameLengthError):
            compute_parity((1, 0, 1))


class TestEncodeFrame:
    def test_known_frame(self):
        frame = encode_frame(KNOWN_PAYLOAD)
        assert frame == SYNC_PATTERN + KNOWN_PAYLOAD + (1,)

    def test_zero_payload(self):
        assert encode_frame((0,) * 12) == tuple(int(b) for b in "10100000000000001")

    def test_length_constant(self):
        assert len(encode_frame(int_to_payload(1234))) == FRAME_BITS == 17

    def test_wrong_length_rejected(self):
        with pytest.raises(FrameLengthError):
            encode_frame((1,) * 11)


class TestDecodeFrame:
    def test_known_frame_round_trip(self):
        payload, valid = decode_frame(encode_frame(KNOWN_PAYLOAD))
        assert payload == KNOWN_PAYLOAD
        assert valid

    def test_payload_flip_detected(self):
        bits = list(encode_frame(KNOWN_PAYLOAD))
        bits[4 + 3] ^= 1
        _, valid = decode_frame(bits)
        assert not valid

    def test_all_data_flips_detected(self):
        frame = encode_frame(int_to_payload(2741))
        for pos in range(4, 17):
            bits = list(frame)
            bits[pos] ^= 1
            _, valid = decode_frame(bits)
            assert not valid, f"flip at position {pos} went undetected"

    def test_wrong_length_rejected(self):
        with pytest.raises(FrameLengthError):
            decode_frame((1, 0, 1, 0))


class TestExhaustive:
    def test_round_trip_all_payloads(self):
        for value in range(4096):
            payload = int_to_payload(value)
            decoded, valid = decode_frame(encode_frame(payload))
            assert valid and decoded == payload


class TestSegmentPayloads:
    def test_empty(self):
        assert segment_payloads(b"") == []

    def test_exact_fit(self):
        payloads = segment_payloads(b"\x12\x34\x56")
        assert len(payloads) == 2
        assert all(len(p) == PAYLOAD_BITS for p in payloads)

    def test_msb_first_zero_padded(self):
        assert segment_payloads(b"\xff") == [tuple(int(b) for b in "111111110000")]
