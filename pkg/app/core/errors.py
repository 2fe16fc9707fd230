#!/usr/bin/env python3
"""
Domain exceptions for RMSup.

Every error carries a human-readable ``detail`` that the CLI prints verbatim.
"""


class RMSupError(Exception):
    """Base class for every error raised by the toolkit."""

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


# ── grid ──────────────────────────────────────────────────────────────────── #

class NegativePower(RMSupError):
    """A power map holds values below zero (corrupted normalization upstream)."""


class BadMagic(RMSupError):
    """An RMG file does not start with the expected magic bytes."""


class TruncatedFile(RMSupError):
    """An RMG file ends before its header or payload is complete."""


class DimensionMismatch(RMSupError):
    """Array shapes or header dimensions disagree."""


class ValueOutOfRange(RMSupError):
    """A value lies outside the range an operation accepts."""


class MissingInput(RMSupError):
    """An input file the step depends on has not been written yet."""


# ── helm_edge / resample ──────────────────────────────────────────────────── #

class GridTooSmall(RMSupError):
    """The grid is smaller than the stencil or window needs."""


class BadThresholds(RMSupError):
    """Canny hysteresis thresholds are not ordered low < high."""


class IndivisibleStride(RMSupError):
    """Grid dimensions are not multiples of the sampling stride."""


class SourceTooSmall(RMSupError):
    """A resampling source cannot support the requested output size."""


# ── scenegen ──────────────────────────────────────────────────────────────── #

class PlacementFailure(RMSupError):
    """Rejection sampling gave up placing buildings or the transmitter."""


# ── diffusion ─────────────────────────────────────────────────────────────── #

class KindMismatch(RMSupError):
    """An operation was called with a schedule of the wrong kind."""


class DegenerateAlphaBar(RMSupError):
    """ᾱ_t is 0 or 1, where the score/denoiser relation is undefined."""


class TimeOutOfRange(RMSupError):
    """A diffusion time or step index lies outside the schedule domain."""


class BadTimeStep(RMSupError):
    """A reverse step violates 0 < dt <= t <= 1."""


class MomentCheckFailed(RMSupError):
    """Sampled moments missed the target band."""


# ── eval / cli ────────────────────────────────────────────────────────────── #

class ZeroReference(RMSupError):
    """NMSE requested against an identically-zero reference."""


class ConfigError(RMSupError):
    """The run configuration file is malformed or holds unknown keys."""


class ManifestError(RMSupError):
    """The dataset manifest is missing, empty or malformed."""


class OutputDivergence(RMSupError):
    """A re-run would overwrite an existing output with different bytes."""
