import math

import numpy as np
import pytest

from gasgiant.errors import AlphaMismatchError
from gasgiant.normal_form import lane_emden, normal_form_radial, profile_exponent


def test_lane_emden_closed_forms():
    le0 = lane_emden(0.0)
    assert le0.radius == pytest.approx(math.sqrt(6), abs=1e-9)
    r = np.linspace(0, le0.radius, 500)
    assert np.max(np.abs(le0.theta(r) - (1 - r * r / 6))) < 1e-9
    le1 = lane_emden(1.0)
    assert le1.radius == pytest.approx(math.pi, abs=1e-9)
    r = np.linspace(0, le1.radius, 500)
    assert np.max(np.abs(le1.theta(r) - np.sinc(r / math.pi))) < 1e-9


def test_polytrope_sound_speed_exponent():
    le = lane_emden(5.0 / 3.0)
    assert profile_exponent(le.sound_speed_depth, le.radius) == pytest.approx(1.0, abs=0.01)


def test_normal_form_recovers_alpha_and_eikonal():
    nf = normal_form_radial(lambda d: d ** 0.5 * (1 + d), 1.0)
    assert nf.alpha == pytest.approx(1.0, abs=1e-2)
    assert nf.eikonal_residual < 1e-8


def test_normal_form_fixed_point():
    nf = normal_form_radial(lambda d: d ** 0.5, 1.0, alpha=1.0)
    assert np.max(np.abs(nf.omega)) < 1e-10


def test_declared_alpha_mismatch():
    with pytest.raises(AlphaMismatchError):
        normal_form_radial(lambda d: d ** 0.5, 1.0, alpha=1.5)
