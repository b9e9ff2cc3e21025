"""Deterministic CPU cost model in simulator ticks (1 tick = 10 microseconds).

Primitive costs are rounded from single-core measurements of the bundled
backend; composite costs follow operation counts of the actual code paths.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..vss import Scheme


@dataclass(frozen=True)
class CostModel:
    message: int = 1
    sign: int = 3
    verify_sig: int = 6
    g1_mul: int = 4
    g1_vec: int = 2  # per term of a multi-exponentiation
    pairing: int = 22
    gt_pow: int = 9
    hash_to_group: int = 8

    @classmethod
    def free(cls) -> CostModel:
        return cls(0, 0, 0, 0, 0, 0, 0, 0)

    def vss_verify(self, scheme: Scheme, k: int) -> int:
        if scheme is Scheme.PEDERSEN:
            return (k + 2) * self.g1_vec
        return 2 * self.pairing + self.gt_pow

    def dprf_verify(self) -> int:
        return self.hash_to_group + 4 * self.g1_mul

    def dealt_verify(self, scheme: Scheme, k: int, ell: int) -> int:
        base = (ell + 1) * self.vss_verify(scheme, k)
        if scheme is Scheme.KZG:
            base += 2 * self.g1_mul + 2 * self.g1_vec
        return base

    def certificate_verify(self, scheme: Scheme, k: int) -> int:
        comps = 2 if scheme is Scheme.PEDERSEN else 1
        return comps * (k * self.dprf_verify() + k * self.g1_vec) + 2 * self.vss_verify(scheme, k)

    def recover_contrib(self, scheme: Scheme) -> int:
        comps = 2 if scheme is Scheme.PEDERSEN else 1
        return comps * (self.hash_to_group + 3 * self.g1_mul)

    def recover_verify(self, scheme: Scheme, k: int) -> int:
        comps = 2 if scheme is Scheme.PEDERSEN else 1
        cost = comps * self.dprf_verify() + self.vss_verify(scheme, k)
        if scheme is Scheme.KZG:
            cost += 2 * self.g1_vec + 2 * self.pairing
        return cost

    def recover(self, scheme: Scheme, k: int) -> int:
        assemble = 2 * k * self.g1_vec
        return assemble + self.certificate_verify(scheme, k)
