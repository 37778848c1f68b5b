from sdirng.core.config import VerifyConfig
from sdirng.diagnostics.checks import check_ceiling


def test_full_ceiling_scan_stays_below_ceiling():
    config = VerifyConfig()
    assert (config.scan_samples, config.scan_max_settings) == (10_000, 6)
    result = check_ceiling(config)
    assert result.passed
    assert result.details["samples"] == 10_000
    assert result.details["violations"] > 0
