"""Tests for metric reports."""
import orjson
import pytest
from pydantic import ValidationError

from core.data_1_2_0.reports import GzslScores, MetricReport, harmonic_mean, load_report, save_report
from core.utils.errors import FormatError


def test_harmonic_mean():
    """Test the harmonic mean.

    This test verifies that:
    1. H(0.5, 1.0) = 2/3
    2. H(0, 0) = 0
    """
    assert harmonic_mean(0.5, 1.0) == pytest.approx(2.0 / 3.0)
    assert harmonic_mean(0.0, 0.0) == 0.0


def test_save_and_load(tmp_path):
    """Test writing and reading a GZSL report.

    This test verifies that:
    1. The report reloads equal to what was saved
    2. The JSON omits the absent zsl_t1
    """
    report = MetricReport(mode="gzsl", gzsl=GzslScores.from_accuracies(0.5, 0.8, gamma=0.3),
                          per_class={"zebra": 0.5})
    save_report(report, tmp_path / "metrics.json")
    assert load_report(tmp_path / "metrics.json") == report
    raw = orjson.loads((tmp_path / "metrics.json").read_bytes())
    assert "zsl_t1" not in raw
    assert raw["gzsl"]["H"] == pytest.approx(2 * 0.5 * 0.8 / 1.3)


def test_mode_requires_its_fields(tmp_path):
    """Test report validation.

    This test verifies that:
    1. A zsl report without zsl_t1 is rejected
    2. An accuracy above 1 is rejected
    3. load_report turns a bad document into FormatError
    """
    with pytest.raises(ValidationError):
        MetricReport(mode="zsl")
    with pytest.raises(ValidationError):
        MetricReport(mode="zsl", zsl_t1=0.5, per_class={"a": 1.5})
    (tmp_path / "metrics.json").write_bytes(b'{"mode": "zsl", "extra": 1}')
    with pytest.raises(FormatError):
        load_report(tmp_path / "metrics.json")
