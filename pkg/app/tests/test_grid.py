#!/usr/bin/env python3
"""Grid types, normalization, amplitude and file formats."""

import struct

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.errors import BadMagic, DimensionMismatch, NegativePower, OutputDivergence, TruncatedFile, ValueOutOfRange
from app.schemas.grid import BinaryMask, Grid2D, RadioMap
from app.services.grid_services import (
    amplitude,
    denormalize,
    normalize_minmax,
    read_rmg,
    to_pixels,
    write_pgm,
    write_rmg,
)
from app.storage.rmg_repo import decode_rmg, encode_rmg


# ── types ──

def test_grid_rejects_non_finite_values():
    with pytest.raises(ValidationError):
        Grid2D.from_array([[0.0, np.nan]])


def test_grid_rejects_shape_mismatch():
    with pytest.raises(ValidationError):
        Grid2D(width=3, height=2, spacing_h=1.0, values=np.zeros((3, 2)))


def test_grid_values_are_read_only():
    g = Grid2D.from_array(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        g.values[0, 0] = 1.0


def test_radio_map_invariants():
    grid = Grid2D.from_array([[0.0, 1.0]])
    RadioMap(grid=grid, tx_pos=(0.5, 0.5), freq_hz=5.9e9, norm_bounds=(-150.0, 23.0))
    with pytest.raises(ValidationError):
        RadioMap(grid=grid, tx_pos=(5.0, 0.5), freq_hz=5.9e9, norm_bounds=(-150.0, 23.0))
    with pytest.raises(ValidationError):
        RadioMap(grid=grid.with_values([[0.0, 1.5]]), tx_pos=(0.5, 0.5), freq_hz=5.9e9, norm_bounds=(0.0, 1.0))
    with pytest.raises(ValidationError):
        RadioMap(grid=grid, tx_pos=(0.5, 0.5), freq_hz=5.9e9, norm_bounds=(1.0, 1.0))


def test_mask_accepts_only_zero_and_one():
    assert BinaryMask.from_array(np.array([[True, False]])).count() == 1
    with pytest.raises(ValidationError):
        BinaryMask.from_array(np.array([[0, 2]]))


# ── normalize_minmax ──

def test_normalize_endpoints():
    out, bounds = normalize_minmax(Grid2D.from_array([[-100.0, -50.0]]))
    np.testing.assert_array_equal(out.values, [[0.0, 1.0]])
    assert bounds == (-100.0, -50.0)


def test_normalize_constant_grid_is_all_zeros():
    out, bounds = normalize_minmax(Grid2D.from_array(np.full((3, 3), 7.0)))
    assert np.all(out.values == 0.0)
    assert bounds == (7.0, 7.0)


def test_normalize_denormalize_round_trip(rng):
    g = Grid2D.from_array(rng.normal(-80.0, 20.0, size=(8, 8)))
    out, bounds = normalize_minmax(g)
    assert out.values.min() == 0.0 and out.values.max() == 1.0
    back = denormalize(out, bounds)
    np.testing.assert_allclose(back.values, g.values, rtol=1e-12)


# ── amplitude ──

def test_amplitude_values():
    assert np.all(amplitude(Grid2D.from_array(np.zeros((2, 2)))).grid.values == 0.0)
    assert amplitude(Grid2D.from_array([[0.25]])).grid.values[0, 0] == 0.5


def test_amplitude_square_round_trip(rng):
    p = Grid2D.from_array(rng.uniform(0.0, 1.0, size=(16, 16)))
    a = amplitude(p).grid.values
    np.testing.assert_allclose(a * a, p.values, rtol=0, atol=1e-15)


def test_amplitude_rejects_negative_power():
    with pytest.raises(NegativePower):
        amplitude(Grid2D.from_array([[0.1, -1e-9]]))


# ── RMG ──

def test_rmg_round_trip_small(tmp_path):
    g = Grid2D.from_array(np.arange(6, dtype=float).reshape(2, 3) / 7.0, spacing_h=0.25)
    path = write_rmg(g, tmp_path / "g.rmg")
    back = read_rmg(path)
    assert (back.width, back.height, back.spacing_h) == (3, 2, 0.25)
    np.testing.assert_array_equal(back.values, g.values)


def test_rmg_round_trip_is_byte_exact(rng, tmp_path):
    g = Grid2D.from_array(rng.uniform(size=(256, 256)))
    path = write_rmg(g, tmp_path / "big.rmg")
    data = path.read_bytes()
    assert len(data) == 4 + 4 + 4 + 8 + 256 * 256 * 8
    assert encode_rmg(read_rmg(path)) == data


def test_rmg_header_layout():
    data = encode_rmg(Grid2D.from_array([[1.0, 2.0]], spacing_h=2.0))
    assert data[:4] == b"RMG1"
    assert struct.unpack_from("<IId", data, 4) == (2, 1, 2.0)


def test_rmg_bad_magic():
    data = b"XXXX" + encode_rmg(Grid2D.from_array([[1.0]]))[4:]
    with pytest.raises(BadMagic):
        decode_rmg(data)


def test_rmg_truncated_payload():
    data = encode_rmg(Grid2D.from_array(np.zeros((2, 2))))
    with pytest.raises(TruncatedFile):
        decode_rmg(data[:-1])
    with pytest.raises(TruncatedFile):
        decode_rmg(data[:10])


def test_rmg_trailing_bytes():
    data = encode_rmg(Grid2D.from_array(np.zeros((2, 2))))
    with pytest.raises(DimensionMismatch):
        decode_rmg(data + b"\x00" * 8)


def test_rmg_masks_are_written_as_zero_one(tmp_path):
    mask = BinaryMask.from_array(np.array([[0, 1], [1, 0]]))
    back = read_rmg(write_rmg(mask, tmp_path / "m.rmg"))
    np.testing.assert_array_equal(back.values, [[0.0, 1.0], [1.0, 0.0]])


def test_rewrite_with_different_content_is_refused(tmp_path):
    path = tmp_path / "g.rmg"
    write_rmg(Grid2D.from_array([[0.5]]), path)
    write_rmg(Grid2D.from_array([[0.5]]), path)
    with pytest.raises(OutputDivergence):
        write_rmg(Grid2D.from_array([[0.25]]), path)
    write_rmg(Grid2D.from_array([[0.25]]), path, force=True)
    assert read_rmg(path).values[0, 0] == 0.25


# ── PGM ──

def test_pgm_pixel_rounding():
    pixels = to_pixels(Grid2D.from_array([[0.0, 0.5, 1.0]]))
    assert pixels.tolist() == [[0, 128, 255]]


def test_pgm_mask_pixels():
    assert to_pixels(BinaryMask.from_array(np.array([[0, 1]]))).tolist() == [[0, 255]]


def test_pgm_rejects_out_of_range(tmp_path):
    with pytest.raises(ValueOutOfRange):
        write_pgm(Grid2D.from_array([[1.5]]), tmp_path / "x.pgm")


def test_pgm_file_layout(tmp_path):
    path = write_pgm(Grid2D.from_array(np.zeros((2, 3))), tmp_path / "z.pgm")
    data = path.read_bytes()
    assert data.startswith(b"P5\n3 2\n255\n")
    assert data[len(b"P5\n3 2\n255\n"):] == bytes(6)
