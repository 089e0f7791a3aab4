import numpy as np


def crandn(rng, *shape):
    """Complex standard normal samples."""
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def by_imag(z):
    """Sort complex values by imaginary part, then real part."""
    z = np.asarray(z)
    return z[np.lexsort((z.real, z.imag))]
