"""
Fast oracle checks: supersingular counts, cyclicity of the reductions, p-adic
arithmetic against residues mod p^6, and group-law, logarithm and dlog
consistency on y^2 = x^3 + x over Q_11.
"""

import logging
import random
import time
from typing import Callable, List, Tuple

from sympy import primerange

from elliptic import WeierstrassCurve, point_add, scalar_mul
from localdata import count_points_mod_p, cubic_roots_mod_p, group_structure_mod_p
from padic_core import from_rational
from qp_structure import elliptic_dlog, formal_log, qp_group_structure, sweep_points
from reports.models import SelftestRecord

logger = logging.getLogger(__name__)

SUPERSINGULAR_PRIMES = [p for p in primerange(8, 101) if p % 4 == 3]
ORACLE_DIGITS = 6


def _supersingular_counts() -> Tuple[bool, str]:
    bad = [(p, d) for p in SUPERSINGULAR_PRIMES for d in (1, 2, 3)
           if count_points_mod_p(WeierstrassCurve(d * d, 0), p) != p + 1]
    return not bad, f"{3 * len(SUPERSINGULAR_PRIMES)} curves" if not bad else f"failures: {bad}"


def _cyclic_reductions() -> Tuple[bool, str]:
    bad = []
    for p in SUPERSINGULAR_PRIMES:
        for d in (1, 2, 3):
            n1, _ = group_structure_mod_p(WeierstrassCurve(d * d, 0), p)
            if n1 != 1 or len(cubic_roots_mod_p(d * d, 0, p)) != 1:
                bad.append((p, d))
    return not bad, "cyclic, one root of x^3 + d^2 x" if not bad else f"failures: {bad}"


def _arithmetic_oracle(seed: int, trials: int = 200) -> Tuple[bool, str]:
    rng = random.Random(seed)
    for _ in range(trials):
        p = rng.choice([2, 3, 5, 7, 11])
        modulus = p ** ORACLE_DIGITS
        a, b = rng.randrange(1, modulus), rng.randrange(1, modulus)
        x, y = from_rational(a, 1, p, ORACLE_DIGITS + 2), from_rational(b, 1, p, ORACLE_DIGITS + 2)
        if (x + y).to_integer(ORACLE_DIGITS) != (a + b) % modulus:
            return False, f"{a} + {b} in Q_{p}"
        if (x * y).to_integer(ORACLE_DIGITS) != (a * b) % modulus:
            return False, f"{a} * {b} in Q_{p}"
        if b % p and (x / y).to_integer(ORACLE_DIGITS) != a * pow(b, -1, modulus) % modulus:
            return False, f"{a} / {b} in Q_{p}"
    return True, f"{trials} random operations mod p^{ORACLE_DIGITS}"


def _group_checks(seed: int, trials: int = 10) -> Tuple[bool, str]:
    curve = WeierstrassCurve(1, 0, 11, 24)
    structure = qp_group_structure(curve)
    working, generator, order = structure.working_model, structure.generator.point, structure.quotient_order
    points = [point for _, point in sweep_points(working, 40)]
    rng = random.Random(seed)
    for _ in range(trials):
        p1, p2, p3 = rng.sample(points, 3)
        if point_add(working, point_add(working, p1, p2), p3) != point_add(working, p1, point_add(working, p2, p3)):
            return False, "associativity"
        k1, k2 = rng.randrange(1, 50), rng.randrange(1, 50)
        t1, t2 = scalar_mul(working, order * k1, p1), scalar_mul(working, order * k2, p1)
        if not formal_log(working, point_add(working, t1, t2)) == formal_log(working, t1) + formal_log(working, t2):
            return False, "log additivity"
        secret = rng.randrange(order * 11 ** 3)
        if elliptic_dlog(working, generator, scalar_mul(working, secret, generator), 3, order) != secret:
            return False, f"dlog of {secret}"
    return True, f"{trials} rounds of associativity, log additivity and dlog"


CHECKS: List[Tuple[str, Callable[[int], Tuple[bool, str]]]] = [
    ("supersingular counts", lambda seed: _supersingular_counts()),
    ("cyclic reductions", lambda seed: _cyclic_reductions()),
    ("p-adic arithmetic oracle", _arithmetic_oracle),
    ("group law, log and dlog", _group_checks),
]


def run_selftest(seed: int = 1) -> List[SelftestRecord]:
    rows = []
    for name, check in CHECKS:
        started = time.perf_counter()
        try:
            passed, detail = check(seed)
        except Exception as e:
            logger.exception("selftest %s raised", name)
            passed, detail = False, f"{type(e).__name__}: {e}"
        rows.append(SelftestRecord(name=name, passed=passed, detail=detail,
                                   seconds=time.perf_counter() - started))
    return rows
