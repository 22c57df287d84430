def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(test_acceptance.VERDICTS.items()):
            terminalreporter.write_line(line)
