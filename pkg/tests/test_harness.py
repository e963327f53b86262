import json
import math

import numpy as np
import pytest

from abelsolve.closed_form import beta_factor
from abelsolve.expr import BaseKind, InhomogeneityClass
from abelsolve.harness import (
    corpus,
    corpus_entry,
    method_tag,
    reproduce_figures,
    run_comparison,
    write_report,
)
from abelsolve.integrator import IntegratorConfig
from abelsolve.problem import CanonicalProblem
from abelsolve.pz_catalog import ParametricCurve


@pytest.fixture(scope="module")
def reports():
    return {p.name: run_comparison(p) for p in corpus()}


def test_corpus_entries():
    entries = corpus()
    assert [p.name for p in entries] == ["fig1", "fig2", "fig3", "fig4", "fig5"]
    assert [str(p.q) for p in entries] == [
        "A * x + B",
        "4 / 9 * x + 2 * A * x^2 + 2 * A^2 * x^3",
        "A / x + A^2 / x^3",
        "A / x^2",
        "A * (exp(2 * x / A) - 1)",
    ]
    assert [p.beta for p in entries] == [1.0, 0.705, 1.0, 1.0, 0.32]
    assert all(p.constants.get("A") == 1.0 for p in entries)
    assert entries[0].constants["B"] == 1.0
    for p in entries:
        a, b = p.interval
        assert a <= p.x0 <= b


def test_corpus_caption_beta_vs_table():
    # captions round or override the tabulated factors; the corpus keeps the captions
    fig2 = corpus_entry(2)
    assert beta_factor(fig2.inhomogeneity_class()) == pytest.approx(0.7142, abs=1e-4)
    assert beta_factor(corpus_entry(5).inhomogeneity_class()) == pytest.approx(0.3218)


def test_corpus_reference_initial_points():
    assert (corpus_entry(3).x0, corpus_entry(3).y0) == ParametricCurve("rational-137-modified")(1.0)
    assert (corpus_entry(4).x0, corpus_entry(4).y0) == ParametricCurve("bessel-13133")(0.3)
    assert (corpus_entry(5).x0, corpus_entry(5).y0) == ParametricCurve("exponential-1319")(1.0)
    with pytest.raises(KeyError):
        corpus_entry(6)


def test_entry1_closed_and_numeric():
    report = run_comparison(corpus_entry(1), methods=["closed-form", "numeric"])
    assert set(report.traces) == {"closed-form", "numeric"}
    dev = report.deviation("closed-form", "numeric")
    assert math.isfinite(dev["max_abs"])
    assert report.residual_stats["numeric"]["max_abs"] < 1e-6
    assert not report.has_error


def test_entry4_bessel_discrepancy_flag():
    report = run_comparison(corpus_entry(4), methods=["bessel-13133", "numeric"])
    flagged = [f for f in report.flags if f["code"] == "large-deviation"]
    assert flagged and set(flagged[0]["methods"]) == {"bessel-13133", "numeric"}
    assert "diagnostic-reference" in report.flag_codes()


def test_method_preconditions():
    with pytest.raises(ValueError):
        run_comparison(corpus_entry(1), methods=[])
    with pytest.raises(ValueError):
        run_comparison(corpus_entry(1), methods=["exponential-1319"])
    with pytest.raises(ValueError):
        run_comparison(corpus_entry(1), methods=["magic"])


def test_numeric_residual_within_band_on_smooth_entries(reports):
    band = 10 * IntegratorConfig().h_step ** 2
    for name in ("fig1", "fig2", "fig5"):
        assert reports[name].residual_stats["numeric"]["max_abs"] <= band
        assert "singularity" not in reports[name].flag_codes()


def test_exponential_reference_agrees_with_numeric(reports):
    dev = reports["fig5"].deviation("numeric", "exponential-1319")
    assert dev["max_normalized"] < 1e-6


def test_primary_reference_chosen_by_residual(reports):
    meta = reports["fig3"].metadata
    assert meta["primary_reference"] == "rational-137-modified"
    assert meta["curve_residuals"]["rational-137-original"] > meta["curve_residuals"]["rational-137-modified"]


def test_deviation_symmetric():
    p = corpus_entry(5)
    ab = run_comparison(p, methods=["numeric", "exponential-1319"]).deviation("numeric", "exponential-1319")
    ba = run_comparison(p, methods=["exponential-1319", "numeric"]).deviation("exponential-1319", "numeric")
    strip = lambda d: {k: v for k, v in d.items() if k not in ("a", "b")}
    assert strip(ab) == strip(ba)


def test_method_error_becomes_flag():
    # x0 inside the exclusion zone: the closed form fails, the report survives
    p = CanonicalProblem.from_text("x + 1", x0=0.0, y0=1.0, interval=(-0.2, 0.2), beta=1.0, name="zero")
    report = run_comparison(p, methods=["closed-form", "numeric"])
    assert report.has_error
    assert "closed-form" not in report.traces and "numeric" in report.traces


def test_singularity_flag():
    p = CanonicalProblem.from_text("-1", x0=0.0, y0=0.5, interval=(0.0, 2.0), beta=1.0, name="sing")
    report = run_comparison(p, methods=["numeric"])
    assert "singularity" in report.flag_codes()
    tr = report.traces["numeric"]
    assert np.isnan(tr.y[-1]) and tr.valid[0]


def test_csv_layout(reports):
    text = reports["fig3"].to_csv()
    lines = text.splitlines()
    header = [l for l in lines if l.startswith("#")]
    assert header == sorted(header)
    cols = lines[len(header)].split(",")
    assert cols == [
        "x", "y_closed", "r_closed", "y_numeric", "r_numeric",
        "y_rational_137_modified", "r_rational_137_modified",
        "y_rational_137_original", "r_rational_137_original",
    ]
    assert len(lines) == len(header) + 1 + 400
    assert method_tag("closed-form") == "closed"


def test_json_mirror(reports, tmp_path):
    csv_path, json_path = write_report(reports["fig1"], tmp_path / "fig1")
    doc = json.loads(json_path.read_text())
    assert doc["methods"] == ["closed-form", "numeric"]
    assert len(doc["x"]) == 400
    assert doc["metadata"]["constants"] == {"A": 1.0, "B": 1.0}
    rows = csv_path.read_text().splitlines()[-400:]
    assert [float(r.split(",")[0]) for r in rows] == doc["x"]


def test_reports_deterministic(tmp_path):
    reproduce_figures(tmp_path / "a")
    reproduce_figures(tmp_path / "b")
    for name in ("fig1", "fig2", "fig3", "fig4", "fig5"):
        for ext in (".csv", ".json"):
            assert (tmp_path / "a" / (name + ext)).read_bytes() == (tmp_path / "b" / (name + ext)).read_bytes()


def test_classification_of_corpus():
    assert corpus_entry(1).inhomogeneity_class() == InhomogeneityClass(BaseKind.POLYNOMIAL, 1)
    assert corpus_entry(4).inhomogeneity_class().kind is BaseKind.RATIONAL
