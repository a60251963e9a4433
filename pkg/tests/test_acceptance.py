"""Acceptance gate: runs every verification criterion at its pinned
tolerance and prints one pass/fail line per criterion.

Note: `cantor_exactness` is expected to fail on its thickness-bound clause.
The exact construction realizes thickness (5*3^m - 117)/216 once the
hull-end cascade appears (and (3^m - 49)/24 before that), both strictly
below the asserted nominal value (3^m - 45)/22; the cantor reports carry the
full discrepancy bookkeeping.  The check is kept as stated rather than
loosened to match the implementation.
"""
from tangencylab import verify

_cache = {}


def _run(key):
    if key not in _cache:
        _cache[key] = verify.run_criterion(key)
    r = _cache[key]
    print()
    print(r.line)
    for line in r.failures:
        print("   ", line)
    return r


def _assert_passed(r):
    assert r.passed, f"{r.key} failed:\n" + "\n".join(str(f) for f in r.failures)


def test_criterion_1_cantor_exactness():
    _assert_passed(_run("cantor_exactness"))


def test_criterion_2_conjugacy():
    _assert_passed(_run("conjugacy"))


def test_criterion_3_renormalization_rate():
    _assert_passed(_run("renorm_rate"))


def test_criterion_4_velocity_table():
    _assert_passed(_run("velocity_table"))


def test_criterion_5_tangency_antimonotonicity():
    _assert_passed(_run("tangency"))


def test_criterion_6_certificate_chain():
    _assert_passed(_run("wang_young"))


def test_criterion_7_attractor_consistency():
    _assert_passed(_run("attractor"))


def test_criterion_8_structural_invariants():
    _assert_passed(_run("structural"))
