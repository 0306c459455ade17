import math
from collections import OrderedDict

import numpy as np
import pytest

from purcell_bpf.coupled_mode import build_filter_network
from purcell_bpf.prototype import synth_maximally_flat

TWO_PI = 2.0 * math.pi
W0 = TWO_PI * 6e9
DW = TWO_PI * 600e6

_RESULTS_KEY = pytest.StashKey[OrderedDict]()


def pytest_configure(config):
    config.stash[_RESULTS_KEY] = OrderedDict()


@pytest.fixture
def acceptance(request):
    """Record one acceptance check: ``acceptance(criterion, label, ok, detail)``."""
    store = request.config.stash[_RESULTS_KEY]

    def record(criterion, label, ok, detail=""):
        store.setdefault(criterion, []).append((label, bool(ok), detail))
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_RESULTS_KEY, None)
    if not store:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(store):
        checks = store[crit]
        for label, ok, detail in checks:
            tr.write_line(f"  criterion {crit:>2} [{'pass' if ok else 'FAIL'}] {label}: {detail}")
    tr.write_line("")
    for crit in sorted(store):
        checks = store[crit]
        failed = [c for c in checks if not c[1]]
        verdict = "PASS" if not failed else f"FAIL ({len(failed)} of {len(checks)} checks)"
        tr.write_line(f"criterion {crit:>2}: {verdict}")


@pytest.fixture(scope="session")
def filter6():
    """6th-order 0 dB and 20 dB filters at 6 GHz / 600 MHz, keyed by IL."""
    return {il: build_filter_network(synth_maximally_flat(6, il), W0, DW) for il in (0.0, 20.0)}
