def pytest_terminal_summary(terminalreporter):
    from test_acceptance import OUTCOMES

    if not OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for o in sorted(OUTCOMES, key=lambda o: o.cid):
        terminalreporter.write_line(o.line())
    n = sum(o.passed for o in OUTCOMES)
    terminalreporter.write_line(f"{n}/{len(OUTCOMES)} criteria pass")
