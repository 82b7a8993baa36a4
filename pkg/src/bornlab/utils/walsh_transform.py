"""Fast Walsh-Hadamard transform."""

import numpy as np


class WalshTransform:
    """Unnormalized Walsh-Hadamard transform in natural (Sylvester) order."""

    @staticmethod
    def fwht(values) -> np.ndarray:
        """Return H^{(x)n} v, i.e. out[S] = sum_x (-1)^{popcount(x & S)} v[x].

        Runs in O(n 2^n). The input is not modified.
        """
        out = np.array(values, dtype=np.float64, copy=True)
        size = out.shape[0]
        if size & (size - 1):
            raise ValueError(f"Walsh transform needs a power-of-two length, got {size}")
        h = 1
        while h < size:
            view = out.reshape(-1, 2, h)
            a = view[:, 0, :].copy()
            b = view[:, 1, :]
            view[:, 0, :] = a + b
            view[:, 1, :] = a - b
            h *= 2
        return out

    @staticmethod
    def inverse(values) -> np.ndarray:
        """Inverse transform, H^{(x)n} v / 2^n."""
        out = WalshTransform.fwht(values)
        return out / out.shape[0]
