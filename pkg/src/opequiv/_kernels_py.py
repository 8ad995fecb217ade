"""Pure-numpy reference kernels.

These define the semantics; the compiled module in ``_kernels_ext.pyx`` must
agree with them bit-for-bit up to summation order.
"""
import numpy as np


def conv_matmul(x, y, ia, ib, ic, starts):
    """Truncated convolution of two matrix-valued coefficient arrays.

    ``x`` has shape (Mx, P, Q) and ``y`` (My, Q, R). For each triple
    ``(ia[t], ib[t], ic[t])`` the product ``x[ia[t]] @ y[ib[t]]`` is added to
    output slot ``ic[t]``. Triples must be sorted by ``ic`` and ``starts``
    holds the first triple of each output slot (every slot is hit at least
    once).
    """
    prod = np.matmul(x[ia], y[ib])
    return np.add.reduceat(prod, starts, axis=0)


def trace_words(mats, words, lengths):
    """Traces of products ``mats[w[0]] @ ... @ mats[w[L-1]]`` for each row w.

    Prefix products are cached so shared prefixes are multiplied once.
    """
    mats = np.asarray(mats, dtype=float)
    cache = {}
    out = np.empty(len(lengths))
    for row, (word, length) in enumerate(zip(words, lengths)):
        key = tuple(int(i) for i in word[:length])
        prod = None
        for cut in range(length, 0, -1):
            prod = cache.get(key[:cut])
            if prod is not None:
                break
        else:
            cut = 1
            prod = mats[key[0]]
            cache[key[:1]] = prod
        for pos in range(cut, length):
            prod = prod @ mats[key[pos]]
            cache[key[: pos + 1]] = prod
        out[row] = np.trace(prod)
    return out
