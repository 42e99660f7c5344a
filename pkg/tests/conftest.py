import os
import random

import pytest

from normsurf.gluing import GlobalGluing, SurfaceTracer
from normsurf.reduction import build_gadget, gadget_triangulation

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def data_path(name):
    return os.path.join(DATA_DIR, name)


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)


@pytest.fixture(scope="session")
def clause_block():
    """(T, N, template) for the six-tetrahedron clause gadget."""
    tpl = build_gadget("clause")
    T, N = gadget_triangulation(tpl)
    return T, N, tpl


@pytest.fixture(scope="session")
def tube_block():
    tpl = build_gadget("tube")
    T, N = gadget_triangulation(tpl)
    return T, N, tpl


def gluing_from_bits(tracer: SurfaceTracer, sites, bits) -> GlobalGluing:
    """Identity everywhere, with the listed two-instance sites set from
    bits (0 = identity, 1 = transposition)."""
    perms = {key: tuple(range(k)) for key, k in tracer.sites.items()}
    for key, bit in zip(sites, bits):
        perms[key] = (0, 1) if bit == 0 else (1, 0)
    return GlobalGluing(perms)


def random_gluing(tracer: SurfaceTracer, rng) -> GlobalGluing:
    perms = {}
    for key, k in tracer.sites.items():
        perm = list(range(k))
        rng.shuffle(perm)
        perms[key] = tuple(perm)
    return GlobalGluing(perms)
