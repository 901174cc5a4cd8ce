import pytest

from mailsignal.ingest import make_event


@pytest.fixture
def ev():
    """Event factory with auto-numbered message ids."""
    counter = iter(range(10**6))

    def build(sender, recipients, t, reply=None, tokens=(), mid=None):
        if isinstance(recipients, str):
            recipients = [recipients]
        return make_event(mid or f"<m{next(counter)}>", sender, recipients, t, reply, tokens)

    return build


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if not mod or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        ok, detail = mod.RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
