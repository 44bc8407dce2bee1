import re

CRITERIA = {
    1: "spectrum of D_hat matches the closed form",
    2: "positive-definite multipliers are contractive",
    3: "characters act isometrically on an abelian group",
    4: "commutator norm bounds",
    5: "coaction identity and slice mechanism",
    6: "spectral distance values, symmetry, triangle, UNBOUNDED",
    7: "state kernels are positive semidefinite",
    8: "monotone compression and byte-identical reruns",
}

_AC = re.compile(r"test_acceptance\.py::test_ac(\d+)_")


def pytest_terminal_summary(terminalreporter):
    outcomes: dict = {}
    for key in ("passed", "failed", "error", "skipped"):
        for rep in terminalreporter.stats.get(key, []):
            m = _AC.search(getattr(rep, "nodeid", ""))
            if m is None or getattr(rep, "when", "call") not in ("call", "setup"):
                continue
            ok = key == "passed"
            if key == "passed" and rep.when == "setup":
                continue
            outcomes.setdefault(int(m.group(1)), []).append(ok)
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for k, text in CRITERIA.items():
        got = outcomes.get(k)
        verdict = "NOT RUN" if got is None else ("PASS" if all(got) else "FAIL")
        terminalreporter.write_line(f"AC{k} {verdict:7s} {text}")
