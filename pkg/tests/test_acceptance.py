"""Acceptance criteria 1-12, one pass/fail line each (run with -s to see them)."""

from __future__ import annotations

import time

import pytest

from drengine.selftest import CRITERIA, criterion_11, run_criterion

_done = {}


def _report(capsys, number, name, out):
    with capsys.disabled():
        print(f"\n[{'PASS' if out.ok else 'FAIL'}] criterion {number:2d} {name}: {out.detail} ({out.seconds:.1f} s)")


@pytest.mark.parametrize("number", range(1, 13))
def test_criterion(number, capsys):
    if number == 11:
        t = time.time()
        out = criterion_11({i: o for i, o in _done.items() if i <= 10}, threads=8)
        out.seconds = time.time() - t
        name = "determinism across thread counts"
    else:
        out = run_criterion(number, threads=1)
        _done[number] = out
        name = CRITERIA[number][0]
    _report(capsys, number, name, out)
    assert out.ok, out.detail
