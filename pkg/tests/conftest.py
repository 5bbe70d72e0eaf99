from __future__ import annotations

import pytest

import helpers
from apf.verification import ConfirmRecord

_original_post_init = ConfirmRecord.__post_init__


def _recording_post_init(self: ConfirmRecord) -> None:
    _original_post_init(self)
    helpers.CONFIRM_LOG.append((self.approver, self.executor))


ConfirmRecord.__post_init__ = _recording_post_init  # type: ignore[method-assign]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if helpers.ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(helpers.ACCEPTANCE):
            ok, detail = helpers.ACCEPTANCE[n]
            terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    if helpers.CONFIRM_LOG:
        selfish = sum(1 for a, e in helpers.CONFIRM_LOG if a == e)
        terminalreporter.write_line(
            f"governance: {len(helpers.CONFIRM_LOG)} confirm records built this session, {selfish} self-approved"
        )


def pytest_sessionfinish(session, exitstatus):
    if any(a == e for a, e in helpers.CONFIRM_LOG):
        session.exitstatus = pytest.ExitCode.TESTS_FAILED


def pytest_collection_modifyitems(session, config, items):
    # acceptance last, so the governance tally covers every other test in the session
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")
