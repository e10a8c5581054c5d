from __future__ import annotations

from ffqaoa.verify import CheckResult, run_verification


def test_check_result_counts():
    r = CheckResult("x", 1e-3, [1e-4, 1e-2, 0.0])
    assert r.total == 3 and r.passed == 2 and not r.ok
    assert r.worst == 1e-2
    assert r.as_dict() == {"passed": 2, "failed": 1, "worst": 1e-2, "tolerance": 1e-3}


def test_reduced_verification_passes():
    checks = run_verification(seed=3, scale=0.2)
    assert set(checks) >= {"energy_vs_ed", "gap_vs_ed", "gradient_vs_fd", "gauge_invariance"}
    for c in checks.values():
        assert c.ok, (c.name, c.worst)
