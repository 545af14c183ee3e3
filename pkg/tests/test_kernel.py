"""The compiled mass kernel and its pure twin must agree exactly."""

import random

import pytest

from uplan._core import _masskernel_py as pure
from uplan._core import compiled_available, kernel_for

compiled = pytest.importorskip("uplan._core._masskernel") \
    if compiled_available() else None

needs_compiled = pytest.mark.skipif(not compiled_available(),
                                    reason="compiled kernel not built")


def random_mass_arrays(rng, nbits, count):
    masks = [rng.randint(1, (1 << nbits) - 1) for _ in range(count)]
    masks = sorted(set(masks))
    weights = [rng.random() + 1e-3 for _ in masks]
    total = sum(weights)
    return masks, [w / total for w in weights]


@needs_compiled
@pytest.mark.parametrize("seed", range(8))
def test_support_and_plausibility_agree(seed):
    rng = random.Random(seed)
    nbits = rng.randint(1, 16)
    masks, masses = random_mass_arrays(rng, nbits, rng.randint(1, 40))
    full = (1 << nbits) - 1
    for _ in range(50):
        query = rng.randint(1, full)
        assert compiled.support(masks, masses, query) == \
            pure.support(masks, masses, query)
        assert compiled.plausibility(masks, masses, query, full) == \
            pure.plausibility(masks, masses, query, full)


@needs_compiled
@pytest.mark.parametrize("seed", range(8))
def test_product_pair_agrees(seed):
    rng = random.Random(1000 + seed)
    size_a, size_b = rng.randint(1, 5), rng.randint(1, 5)
    masks_a, masses_a = random_mass_arrays(rng, size_a, rng.randint(1, 10))
    masks_b, masses_b = random_mass_arrays(rng, size_b, rng.randint(1, 10))
    got = compiled.product_pair(masks_a, masses_a, masks_b, masses_b, size_b)
    want = pure.product_pair(masks_a, masses_a, masks_b, masses_b, size_b)
    assert got[0] == want[0]
    assert got[1] == pytest.approx(want[1], abs=0)


@needs_compiled
@pytest.mark.parametrize("seed", range(8))
def test_project_agrees(seed):
    rng = random.Random(2000 + seed)
    src, dst = rng.randint(1, 8), rng.randint(1, 6)
    masks, masses = random_mass_arrays(rng, src, rng.randint(1, 20))
    image = [rng.randint(1, (1 << dst) - 1) for _ in range(src)]
    got = compiled.project(masks, masses, image)
    want = pure.project(masks, masses, image)
    assert got[0] == want[0]
    assert got[1] == pytest.approx(want[1], abs=0)


def test_wide_frames_route_to_pure_kernel():
    assert kernel_for(65) is pure
    assert kernel_for(200) is pure


def test_pure_kernel_handles_wide_masks():
    masks = [1 << 100, (1 << 100) | 1]
    masses = [0.4, 0.6]
    assert pure.support(masks, masses, (1 << 101) - 1) == pytest.approx(1.0)
    assert pure.support(masks, masses, 1 << 100) == pytest.approx(0.4)


def test_kernel_env_override(monkeypatch):
    import importlib

    import uplan._core as core

    monkeypatch.setenv("UPLAN_KERNEL", "pure")
    reloaded = importlib.reload(core)
    try:
        assert reloaded.backend_name() == "pure"
    finally:
        monkeypatch.delenv("UPLAN_KERNEL")
        importlib.reload(core)
