"""Exact arithmetic coding over a static model with rational probabilities.

The coder works on big integers, so there is no renormalisation and no
precision loss.  A message is mapped to the shortest dyadic interval
[c/2^b, (c+1)/2^b) inside its model interval, which costs at most
sum(lg 1/p) + 2 bits including termination.
"""

from fractions import Fraction
from math import lcm


class StaticModel:
    """Symbol alphabet 0..k-1 with fixed probabilities."""

    def __init__(self, probs):
        probs = [Fraction(p) for p in probs]
        if any(p <= 0 for p in probs) or sum(probs) != 1:
            raise ValueError("probabilities must be positive and sum to 1")
        denom = lcm(*(p.denominator for p in probs))
        self.probs = probs
        self.denom = denom
        self.freqs = [int(p * denom) for p in probs]
        cum = [0]
        for f in self.freqs:
            cum.append(cum[-1] + f)
        self.cum = cum


def encode(symbols, model: StaticModel):
    """Return (code, nbits) for the symbol sequence."""
    D = model.denom
    freqs, cum = model.freqs, model.cum
    low, width, scale = 0, 1, 1
    for s in symbols:
        low = low * D + cum[s] * width
        width *= freqs[s]
        scale *= D
    hi = low + width
    b = 0
    while True:
        # smallest c with c/2^b >= low/scale
        c = -((-low << b) // scale)
        if (c + 1) * scale <= hi << b:
            return c, b
        b += 1


def decode(code: int, nbits: int, count: int, model: StaticModel):
    """Inverse of encode for a message of known length."""
    D = model.denom
    freqs, cum = model.freqs, model.cum
    out = []
    low, width, scale = 0, 1, 1
    for _ in range(count):
        scale *= D
        target = code * scale  # compare code/2^b against interval bounds
        base = low * D
        for s in range(len(freqs)):
            lo_s = base + cum[s] * width
            hi_s = lo_s + freqs[s] * width
            if (lo_s << nbits) <= target < (hi_s << nbits):
                break
        else:
            raise ValueError("code does not lie inside the model interval")
        out.append(s)
        low = lo_s
        width *= freqs[s]
    return out
