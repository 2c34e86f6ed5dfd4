"""Seeded random modules and maps for property suites."""

from __future__ import annotations

import numpy as np

from .modules import FpModule, ModuleMap


def divisors(m: int) -> list[int]:
    return [d for d in range(1, m + 1) if m % d == 0]


def random_module(rng: np.random.Generator, m: int, max_rank: int = 3, min_rank: int = 0) -> FpModule:
    rank = int(rng.integers(min_rank, max_rank + 1))
    orders = [int(rng.choice(divisors(m)[1:])) for _ in range(rank)]
    return FpModule.from_orders(m, orders)


def random_map(rng: np.random.Generator, dom: FpModule, cod: FpModule) -> ModuleMap:
    """Uniformly random homomorphism between canonical modules."""
    if dom.rank == 0 or cod.rank == 0:
        return ModuleMap.zero(dom, cod)
    d = dom.orders[None, :]
    e = cod.orders[:, None]
    # a_ji must be a multiple of e_j / gcd(e_j, d_i)
    step = e // np.gcd(e, d)
    raw = rng.integers(0, 1 << 30, size=(cod.rank, dom.rank))
    return ModuleMap(dom, cod, (raw * step) % e)


def random_surjection(rng: np.random.Generator, dom: FpModule, cod: FpModule, tries: int = 50):
    from .modules import is_surjective

    for _ in range(tries):
        f = random_map(rng, dom, cod)
        if is_surjective(f):
            return f
    return None
