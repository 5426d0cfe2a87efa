import numpy as np
import pytest

from rles.errors import ComparisonError, MappingError, ReferenceDataError
from rles.reference import (compare_profiles, load_reference_profiles, load_run_profiles,
                            parse_mapping)


def _write(path, text):
    path.write_text(text)
    return path


def test_mapping_parses_one_based_columns():
    assert parse_mapping("y:1,Uplus:3") == {"y": 0, "U_plus": 2}
    assert parse_mapping(" yplus:2 , u+:4, uv+:5") == {"y_plus": 1, "U_plus": 3, "uv_plus": 4}


@pytest.mark.parametrize("spec", ["y1,Uplus:3", "y:a,Uplus:3", "y:0,Uplus:3", "Uplus:3",
                                  "y:1", "y:1,bogus:2", "y:1,Uplus:2,u+:3"])
def test_bad_mappings_rejected(spec):
    with pytest.raises(MappingError):
        parse_mapping(spec)


def test_two_point_file(tmp_path):
    p = _write(tmp_path / "ref.dat", "% header\n# more\n0.0 0.0 1.0\n10.0 1.0 2.0\n")
    ref = load_reference_profiles(p, "yplus:1,Uplus:3")
    assert len(ref) == 2
    np.testing.assert_array_equal(ref.columns["U_plus"], [1.0, 2.0])
    assert ref.coordinate == "y_plus"


def test_comments_only_file_is_an_error(tmp_path):
    p = _write(tmp_path / "ref.dat", "% nothing here\n# still nothing\n\n")
    with pytest.raises(ReferenceDataError, match="no data rows"):
        load_reference_profiles(p, "y:1,Uplus:2")


def test_column_count_mismatch_cites_line(tmp_path):
    lines = ["% c"] + [f"{i} {i * 2}" for i in range(5)] + ["5 10 99"]
    p = _write(tmp_path / "ref.dat", "\n".join(lines) + "\n")
    with pytest.raises(ReferenceDataError) as err:
        load_reference_profiles(p, "y:1,Uplus:2")
    assert err.value.line == 7
    assert "line 7" in str(err.value)


def test_non_numeric_cites_line_and_column(tmp_path):
    p = _write(tmp_path / "ref.dat", "0 1\n1 x2\n")
    with pytest.raises(ReferenceDataError) as err:
        load_reference_profiles(p, "y:1,Uplus:2")
    assert (err.value.line, err.value.column) == (2, 2)


def test_mapping_beyond_file_width(tmp_path):
    p = _write(tmp_path / "ref.dat", "0 1\n1 2\n")
    with pytest.raises(MappingError):
        load_reference_profiles(p, "y:1,Uplus:3")


def test_non_monotone_coordinate(tmp_path):
    p = _write(tmp_path / "ref.dat", "0 1\n2 2\n1 3\n")
    with pytest.raises(ReferenceDataError, match="monotone"):
        load_reference_profiles(p, "y:1,Uplus:2")


@pytest.fixture
def profile_pair(tmp_path):
    yp = np.linspace(0.0, 180.0, 41)
    up = np.log1p(yp) * 2.5 + 1.0
    p = tmp_path / "ref.dat"
    np.savetxt(p, np.column_stack([yp, up]), header="yplus Uplus", comments="% ")
    return yp, up, load_reference_profiles(p, "yplus:1,Uplus:2")


def test_self_comparison_is_zero(profile_pair):
    yp, up, ref = profile_pair
    rep = compare_profiles({"y_plus": yp, "U_plus": up}, ref, "Uplus")
    assert rep.rel_l2 == 0.0 and rep.rel_linf == 0.0


def test_scaled_profile_gives_known_error(profile_pair):
    yp, up, ref = profile_pair
    rep = compare_profiles({"y_plus": yp, "U_plus": 1.10 * up}, ref, "Uplus")
    assert rep.rel_linf == pytest.approx(0.10, abs=1e-12)
    assert rep.rel_l2 == pytest.approx(0.10, abs=1e-12)


def test_linear_reference_interpolates_exactly(tmp_path):
    p = tmp_path / "ref.dat"
    np.savetxt(p, np.column_stack([[0.0, 50.0, 200.0], [1.0, 11.0, 41.0]]))
    ref = load_reference_profiles(p, "yplus:1,Uplus:2")
    x = np.array([3.3, 17.0, 49.9, 120.0])
    rep = compare_profiles({"y_plus": x, "U_plus": 1.0 + 0.2 * x}, ref, "Uplus")
    assert rep.rel_linf < 1e-14


def test_window_restricts_points(profile_pair):
    yp, up, ref = profile_pair
    rep = compare_profiles({"y_plus": yp, "U_plus": up}, ref, "Uplus", window=(5.0, 150.0))
    assert rep.x.min() >= 5.0 and rep.x.max() <= 150.0


def test_no_overlap_raises(profile_pair):
    _, _, ref = profile_pair
    with pytest.raises(ComparisonError, match="no overlap"):
        compare_profiles({"y_plus": np.array([500.0, 600.0]), "U_plus": np.ones(2)}, ref, "Uplus")


def test_missing_quantity_raises(profile_pair):
    yp, up, ref = profile_pair
    with pytest.raises(ComparisonError):
        compare_profiles({"y_plus": yp, "U_plus": up}, ref, "urms")


def test_report_csv_round_trip(tmp_path, profile_pair):
    yp, up, ref = profile_pair
    rep = compare_profiles({"y_plus": yp, "U_plus": up * 1.01}, ref, "Uplus")
    rep.write_csv(tmp_path / "c.csv")
    back = load_run_profiles(tmp_path / "c.csv")
    np.testing.assert_array_equal(back["U_plus_run"], rep.run)
