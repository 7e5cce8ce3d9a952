import math
from typing import Dict

from corpus.labels import Label

# Remainders are compared after rounding so float noise cannot reorder genuine ties
_REMAINDER_DIGITS = 9


def largest_remainder(n: int, fractions: Dict[Label, float]) -> Dict[Label, int]:
    """
    Apportion n items over fractions so the counts sum to exactly n.

    Every label first receives floor(n * fraction); the leftover items go one
    each to the largest remainders, ties broken by taxonomy order.
    """
    total = sum(fractions.values())
    if n < 0 or total <= 0:
        raise ValueError("largest_remainder needs n >= 0 and a positive fraction total")

    quotas = {label: n * fraction / total for label, fraction in fractions.items()}
    counts = {label: math.floor(round(quota, _REMAINDER_DIGITS)) for label, quota in quotas.items()}
    leftover = n - sum(counts.values())

    ranked = sorted(
        quotas,
        key=lambda label: (-round(quotas[label] - counts[label], _REMAINDER_DIGITS), label.order),
    )
    for label in ranked[:leftover]:
        counts[label] += 1
    return counts
