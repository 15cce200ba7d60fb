def pytest_terminal_summary(terminalreporter):
    try:
        from acceptance_harness import REPORT
    except ImportError:
        return
    if not REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(REPORT, key=lambda k: int(k[1:])):
        ok, detail = REPORT[name]
        terminalreporter.write_line(f"{name:>4} {'PASS' if ok else 'FAIL'}  {detail}")
