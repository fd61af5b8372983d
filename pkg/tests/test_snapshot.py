import struct

import numpy as np
import pytest

from micropolar import (
    MAGIC,
    OutputError,
    SnapshotFormatError,
    SnapshotWriter,
    State,
    VectorField,
    decode_fields,
    decode_state,
    encode_fields,
    encode_state,
    random_vector,
    read_snapshot,
)

HEADER = struct.Struct('<4sIIdIB')


def _patched(data: bytes, **changes) -> bytes:
    fields = dict(zip(('magic', 'version', 'n', 'box_length', 'count', 'reality'), HEADER.unpack_from(data)))
    fields.update(changes)
    return HEADER.pack(*fields.values()) + data[HEADER.size:]


class TestEncoding:
    def test_state_roundtrip(self, state16):
        data = encode_state(state16)
        assert data[:4] == MAGIC
        assert len(data) == HEADER.size + 6 * 16**3 * 16
        back = decode_state(data, t=2.5)
        assert back.grid == state16.grid
        assert back.t == 2.5
        np.testing.assert_array_equal(back.u.modes, state16.u.modes)
        np.testing.assert_array_equal(back.omega.modes, state16.omega.modes)
        assert back.is_real

    def test_reality_is_per_field(self, grid16, rng):
        u = random_vector(grid16, rng, solenoidal=True)
        omega = VectorField(grid16, random_vector(grid16, rng).modes * 1j, real=False)
        data = encode_state(State(u, omega))
        assert HEADER.unpack_from(data)[-1] == 0b000111
        back = decode_state(data)
        assert back.u.is_real and not back.omega.is_real

    def test_single_field(self, grid16, rng):
        v = random_vector(grid16, rng)
        grid, (back,) = decode_fields(encode_fields([v]))
        assert grid == grid16
        assert back == v

    def test_encoding_limits(self, grid16, rng):
        v = random_vector(grid16, rng)
        with pytest.raises(SnapshotFormatError):
            encode_fields([])
        with pytest.raises(SnapshotFormatError):
            encode_fields([v, v, v])


class TestDecodingErrors:
    @pytest.mark.parametrize(
        'changes',
        [
            {'magic': b'NOPE'},
            {'version': 2},
            {'count': 4},
            {'count': 0},
            {'n': 24},
            {'reality': 0b000001},
        ],
    )
    def test_bad_headers(self, state16, changes):
        with pytest.raises(SnapshotFormatError):
            decode_state(_patched(encode_state(state16), **changes))

    def test_short_data(self, state16):
        data = encode_state(state16)
        with pytest.raises(SnapshotFormatError):
            decode_state(data[: HEADER.size - 1])
        with pytest.raises(SnapshotFormatError):
            decode_state(data[:-16])

    def test_state_needs_two_fields(self, state16):
        with pytest.raises(SnapshotFormatError):
            decode_state(encode_fields([state16.u]))


class TestWriter:
    def test_files_in_submission_order(self, tmp_path, state16):
        later = State(state16.u * 0.5, state16.omega, 1.0)
        writer = SnapshotWriter(tmp_path / 'snaps')
        first = writer.submit(state16)
        writer(later)
        written = writer.close()
        assert written == [first, tmp_path / 'snaps' / 'state-000001.mpsf']
        assert first.name == 'state-000000.mpsf'
        assert read_snapshot(written[1]).u == later.u
        assert not list((tmp_path / 'snaps').glob('.*'))

    def test_context_manager(self, tmp_path, state16):
        with SnapshotWriter(tmp_path) as writer:
            writer(state16)
        assert [p.name for p in tmp_path.iterdir()] == ['state-000000.mpsf']

    def test_failed_writes_surface_on_close(self, tmp_path, state16):
        blocker = tmp_path / 'blocker'
        blocker.write_text('', encoding='utf-8')
        writer = SnapshotWriter(blocker / 'snaps')
        writer(state16)
        with pytest.raises(OutputError):
            writer.close()
