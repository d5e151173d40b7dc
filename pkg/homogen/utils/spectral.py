"""FFT helpers for 1-periodic families in the slow time s and for fields on the box."""
import numpy as np


def _along(factor: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = factor.shape[0]
    return factor.reshape(shape)


def _rfft_modes(m: int) -> np.ndarray:
    return np.fft.rfftfreq(m, d=1.0 / m)


def spectral_derivative(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """d/ds of uniform samples of a 1-periodic function; exact below degree M/2."""
    values = np.asarray(values, dtype=float)
    m = values.shape[axis]
    factor = 2j * np.pi * _rfft_modes(m)
    if m % 2 == 0:
        factor[-1] = 0.0
    coeffs = np.fft.rfft(values, axis=axis)
    return np.fft.irfft(coeffs * _along(factor, axis, values.ndim), n=m, axis=axis)


def spectral_antiderivative(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Periodic antiderivative of mean-zero samples, fixed by B(0) = 0."""
    values = np.asarray(values, dtype=float)
    m = values.shape[axis]
    modes = _rfft_modes(m)
    factor = np.zeros(modes.shape, dtype=complex)
    factor[1:] = 1.0 / (2j * np.pi * modes[1:])
    if m % 2 == 0:
        factor[-1] = 0.0
    coeffs = np.fft.rfft(values, axis=axis)
    result = np.fft.irfft(coeffs * _along(factor, axis, values.ndim), n=m, axis=axis)
    return result - np.take(result, [0], axis=axis)


def trig_interpolate(values: np.ndarray, s) -> np.ndarray:
    """Evaluate the trigonometric interpolant of samples (M, ...) at times s.

    Returns an array of shape s.shape + values.shape[1:].
    """
    values = np.asarray(values, dtype=float)
    m = values.shape[0]
    s = np.asarray(s, dtype=float)
    coeffs = np.fft.rfft(values, axis=0) / m
    modes = _rfft_modes(m)
    weights = np.full(modes.shape, 2.0)
    weights[0] = 1.0
    if m % 2 == 0:
        weights[-1] = 1.0
    phases = np.exp(2j * np.pi * np.multiply.outer(s, modes)) * weights
    return np.real(np.tensordot(phases, coeffs, axes=([-1], [0])))


def box_wavenumbers(n: int, length: float) -> np.ndarray:
    """Cycles per unit length for n nodes on a box of the given length."""
    return np.fft.fftfreq(n, d=length / n)


def phase_shift(u: np.ndarray, c: float, length: float) -> np.ndarray:
    """u(x - c) for the trigonometric interpolant of u on a periodic box.

    The Nyquist mode of an even grid is projected out so that shifts compose.
    """
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    c = float(c) - length * np.floor(float(c) / length)
    kappa = box_wavenumbers(n, length)
    factor = np.exp(-2j * np.pi * kappa * c)
    if n % 2 == 0:
        factor[n // 2] = 0.0
    return np.real(np.fft.ifft(np.fft.fft(u) * factor))
