"""Thin wrappers over scipy.fft with a process-wide worker count.

pocketfft computes each 1-D transform of a batch independently, so the
results do not depend on the worker count.
"""

import os

import scipy.fft as sfft

_workers = 1


def set_threads(n=None):
    """Set the FFT worker count; ``None`` means all available cores."""
    global _workers
    _workers = int(n) if n else (os.cpu_count() or 1)


def get_threads():
    return _workers


def fft(a, n=None, axis=-1):
    return sfft.fft(a, n=n, axis=axis, workers=_workers)


def ifft(a, n=None, axis=-1):
    return sfft.ifft(a, n=n, axis=axis, workers=_workers)


def rfft(a, n=None, axis=-1):
    return sfft.rfft(a, n=n, axis=axis, workers=_workers)


def irfft(a, n=None, axis=-1):
    return sfft.irfft(a, n=n, axis=axis, workers=_workers)


next_fast_len = sfft.next_fast_len
