"""Pure-Python evidential mass kernel.

Focal sets are bitmasks over a frame's element order; a mass function is a
pair of parallel sequences (masks, masses).  This twin mirrors the compiled
kernel exactly and additionally accepts masks wider than 64 bits, which the
compiled kernel rejects.
"""

from __future__ import annotations

BACKEND = "pure"


def support(masks, masses, query: int) -> float:
    """Sum of the masses of all focal sets contained in ``query``."""
    total = 0.0
    for mask, mass in zip(masks, masses):
        mask = int(mask)
        if (mask | query) == query:
            total += mass
    return total


def plausibility(masks, masses, query: int, full: int) -> float:
    """1 minus the support of the complement of ``query`` within ``full``."""
    return 1.0 - support(masks, masses, full & ~query)


def product_pair(masks_a, masses_a, masks_b, masses_b, size_b: int):
    """Combine two mass functions into one over the cross-product frame.

    Product elements are laid out a-major: element (i, j) gets bit
    ``i * size_b + j``, so the focal product of A and B is the union of B's
    mask shifted into each set bit of A.  Masses multiply; identical product
    sets are merged.  Returns (masks, masses) sorted by mask.
    """
    acc: dict[int, float] = {}
    for mask_a, mass_a in zip(masks_a, masses_a):
        mask_a = int(mask_a)
        for mask_b, mass_b in zip(masks_b, masses_b):
            mask_b = int(mask_b)
            product = 0
            bit = 0
            rest = mask_a
            while rest:
                if rest & 1:
                    product |= mask_b << (bit * size_b)
                rest >>= 1
                bit += 1
            acc[product] = acc.get(product, 0.0) + mass_a * mass_b
    out = sorted(acc.items())
    return [m for m, _ in out], [v for _, v in out]


def project(masks, masses, image):
    """Map each focal set through a per-element image and merge equal targets.

    ``image[i]`` is the target-frame mask compatible with source element i.
    Returns (masks, masses) sorted by mask.
    """
    acc: dict[int, float] = {}
    for mask, mass in zip(masks, masses):
        mask = int(mask)
        target = 0
        bit = 0
        rest = mask
        while rest:
            if rest & 1:
                target |= int(image[bit])
            rest >>= 1
            bit += 1
        acc[target] = acc.get(target, 0.0) + mass
    out = sorted(acc.items())
    return [m for m, _ in out], [v for _, v in out]
