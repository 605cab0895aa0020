import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cayley_ising.errors import DomainError
from cayley_ising.fields import (
    ConstantField,
    Thermo,
    art_field,
    bg_field,
    cubic_rrx_roots,
    h_star,
    reduced_wp_roots,
    solve_ti,
    ti_field,
    wp_field,
    xi_to_fields,
    zachary_field,
    zachary_sequence,
)
from cayley_ising.fields.families import oscillating_field
from cayley_ising.thermo import (
    CurveSpec,
    an_monotonicity,
    beta_of_h,
    emit_curve,
    entropy_fd,
    entropy_k2_closed,
    entropy_ti,
    entropy_zero,
    free_energy_bg,
    free_energy_k2_closed,
    free_energy_limit,
    free_energy_ti,
    free_energy_wp,
    free_energy_wp_closed,
    free_energy_wp_xi,
    local_term_a,
    log_b_term,
    stolz_cesaro_average,
    xi1_closed_form,
)
from cayley_ising.tree import SubgroupSpec, TreeGeometry

T1 = Thermo(1.0, 1.0)
F_STAR_K2 = -1.9180505476526273


# --- local term ---------------------------------------------------------------

def test_local_term_examples():
    assert local_term_a(0.0, Thermo(1.0, 0.7)) == pytest.approx(math.log(2 * math.cosh(0.7)) / 0.7, abs=1e-14)
    assert local_term_a(1.0, T1) == pytest.approx(0.5 * math.log(4 * math.cosh(2.0)), abs=1e-14)
    assert local_term_a(1.0, T1) == pytest.approx(1.3556485542388774, abs=1e-13)


@settings(max_examples=200)
@given(h=st.floats(-30, 30), J=st.floats(-3, 3), beta=st.floats(0.01, 5))
def test_local_term_even_and_bounded(h, J, beta):
    t = Thermo(J, beta)
    a = local_term_a(h, t)
    assert a == local_term_a(-h, t)
    assert a == pytest.approx(local_term_a(h, Thermo(-J, beta)), rel=1e-14)
    assert a >= math.log(2) / beta - 1e-12


@settings(max_examples=200)
@given(x=st.floats(0, 20), y=st.floats(0, 20), beta=st.floats(0.05, 3))
def test_local_term_monotone_in_abs_h(x, y, beta):
    t = Thermo(1.0, beta)
    if x < y:
        assert local_term_a(x, t) <= local_term_a(y, t) + 1e-12


def test_log_b_term_large_argument():
    assert log_b_term(800.0, 1.0) == pytest.approx(1600.0, rel=1e-12)


# --- translation-invariant free energies ----------------------------------------

def test_free_energy_ti_examples():
    assert free_energy_ti(T1, 0.0) == pytest.approx(-1.1269280110429725, abs=1e-14)
    assert free_energy_ti(T1, 0.7) == free_energy_ti(T1, -0.7)
    assert free_energy_ti(T1, h_star(2, T1)) == pytest.approx(F_STAR_K2, abs=1e-12)


def test_free_energy_k2_closed_examples():
    assert free_energy_k2_closed(T1) == pytest.approx(F_STAR_K2, abs=1e-13)
    with pytest.raises(DomainError):
        free_energy_k2_closed(Thermo(1.0, 0.5))


def test_k2_closed_agrees_with_ti_form():
    for bj in np.linspace(0.6, 2.0, 50):
        t = Thermo(1.0, float(bj))
        assert free_energy_k2_closed(t) == pytest.approx(free_energy_ti(t, h_star(2, t)), abs=1e-8)


def test_k2_closed_continuous_at_threshold():
    t = Thermo(1.0, math.log(3) / 2 + 1e-7)
    assert free_energy_k2_closed(t) == pytest.approx(free_energy_ti(t, 0.0), abs=1e-5)


# --- the general limit --------------------------------------------------------

def test_limit_zero_field_exact():
    t = Thermo(1.0, 0.8)
    lim = free_energy_limit(ConstantField(0.0), TreeGeometry(3), t, n_max=8, tol=0.0)
    for F in lim.partials:
        assert F == pytest.approx(-math.log(2 * math.cosh(0.8)) / 0.8, abs=1e-14)


def test_limit_stops_at_tolerance():
    lim = free_energy_limit(ConstantField(0.3), TreeGeometry(2), T1, n_max=10, tol=1e-9)
    assert lim.converged and lim.n == 1


def test_limit_zachary():
    field = zachary_field(0.5, 2, T1, 20)
    lim = free_energy_limit(field, TreeGeometry(2), T1, n_max=20)
    assert lim.value == pytest.approx(free_energy_ti(T1, 0.0), abs=1e-3)
    assert lim.extrapolated == pytest.approx(free_energy_ti(T1, 0.0), abs=1e-6)


def test_limit_art():
    field = art_field(ti_field(h_star(2, T1), 2, T1), 2, 3)
    lim = free_energy_limit(field, TreeGeometry(3), T1, n_max=14)
    assert not lim.converged
    assert lim.extrapolated == pytest.approx(free_energy_ti(T1, 0.0), abs=1e-5)
    # The partials approach from below and monotonically.
    assert all(b > a for a, b in zip(lim.partials[1:], lim.partials[2:]))


def test_limit_wp_weights_emerge_from_census():
    t = Thermo.from_alpha(0.1)
    h1, h2 = reduced_wp_roots(4, t)[-1]
    field = wp_field((h1, h2, -h2, -h1), SubgroupSpec({1}), 4, t)
    lim = free_energy_limit(field, TreeGeometry(4), t, n_max=16)
    assert lim.value == pytest.approx(free_energy_wp(t, h1, h2), abs=1e-9)


def test_free_energy_bg():
    assert free_energy_bg(T1, 2) == pytest.approx(F_STAR_K2, abs=1e-12)
    for turns in (0, 1):
        field = bg_field(turns, 2, T1, 14)
        lim = free_energy_limit(field, TreeGeometry(2, half=True), T1, n_max=14, tol=0.0)
        assert lim.partials[-1] == pytest.approx(F_STAR_K2, abs=1e-12)


def test_free_energy_bg_path_correction_decays():
    field = bg_field((1, 0), 3, T1, 14)
    lim = free_energy_limit(field, TreeGeometry(3, half=True), T1, n_max=14, tol=0.0)
    target = free_energy_bg(T1, 3)
    gaps = [abs(F - target) for F in lim.partials[4:]]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    for n in range(4, 15):
        assert abs(lim.partials[n] - target) < 10 * n / 3**n


def test_stolz_cesaro_zachary():
    ts = zachary_sequence(0.5, 2, T1, 20)
    avg = stolz_cesaro_average(ts, TreeGeometry(2), T1)
    assert avg == pytest.approx(log_b_term(0.0, 1.0), abs=1e-3)


# --- weakly periodic free energies --------------------------------------------

def test_wp_zero_field_is_ti_zero():
    t = Thermo.from_alpha(0.1)
    assert free_energy_wp(t, 0.0, 0.0) == pytest.approx(free_energy_ti(t, 0.0), abs=1e-14)


@pytest.mark.parametrize("alpha", [0.05, 0.1, 0.15])
def test_wp_forms_and_ordering(alpha):
    t = Thermo.from_alpha(alpha)
    for xi in cubic_rrx_roots(alpha).admissible:
        h1, h2 = xi_to_fields(xi, t)
        F_h = free_energy_wp(t, h1, h2)
        assert F_h == pytest.approx(free_energy_wp_xi(t, xi), abs=1e-8)
        assert free_energy_ti(t, h_star(4, t)) < F_h < free_energy_ti(t, 0.0)


def test_xi1_closed_form():
    beta = -0.5 * math.log(0.1)
    xi = xi1_closed_form(beta)
    assert xi == pytest.approx(max(cubic_rrx_roots(0.1).admissible), abs=1e-6)
    assert xi == pytest.approx(8.809691800832073, abs=1e-9)


@pytest.mark.parametrize("alpha", [0.03, 0.05, 0.1, 0.15])
def test_w_formula_matches_xi_form(alpha):
    t = Thermo.from_alpha(alpha)
    xi = xi1_closed_form(t.beta)
    assert free_energy_wp_closed(t.beta) == pytest.approx(free_energy_wp_xi(t, xi), abs=1e-6)


# --- parametric curve and entropy ---------------------------------------------

def test_beta_of_h_round_trip():
    assert beta_of_h(1.829136159423517, 2, 1.0) == pytest.approx(1.0, abs=1e-6)


def test_beta_of_h_zero_limit():
    with pytest.raises(DomainError, match="atanh"):
        beta_of_h(0.0, 3)
    assert beta_of_h(1e-6, 3) == pytest.approx(math.atanh(1 / 3), abs=1e-6)


def test_beta_of_h_increasing():
    hs = np.linspace(0.01, 10, 400)
    bs = [beta_of_h(float(h), 4) for h in hs]
    assert all(b > a for a, b in zip(bs, bs[1:]))


@settings(max_examples=40, deadline=None)
@given(h=st.floats(0.05, 8), k=st.integers(2, 6), J=st.floats(0.3, 3))
def test_beta_of_h_inverts_solver(h, k, J):
    t = Thermo(J, beta_of_h(h, k, J))
    roots = solve_ti(k, t).roots
    assert min(abs(r - h) for r in roots) < 1e-8 * max(1, h)


def test_entropy_examples():
    assert entropy_zero(Thermo(1.0, 1e-3)) == pytest.approx(math.log(2), abs=1e-4)
    assert entropy_zero(T1) == pytest.approx(0.3653338550872076, abs=1e-14)
    assert entropy_ti(T1, 0.0, 2) == entropy_zero(T1)


def test_entropy_k2_examples():
    assert entropy_k2_closed(T1) == pytest.approx(-0.2757818158245866, abs=1e-13)
    assert entropy_k2_closed(T1) == pytest.approx(entropy_ti(T1, h_star(2, T1), 2), abs=1e-8)
    with pytest.raises(DomainError):
        entropy_k2_closed(Thermo(1.0, 0.5))


def test_entropy_rejects_inconsistent_h():
    with pytest.raises(DomainError):
        entropy_ti(T1, 1.0, 2)


def test_entropy_k2_increasing_in_beta():
    bs = np.linspace(0.6, 2.0, 60)
    S = [entropy_k2_closed(Thermo(1.0, float(b))) for b in bs]
    assert all(b > a for a, b in zip(S, S[1:]))
    assert all(s < 0 for s in S)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_entropy_ti_matches_finite_difference(k):
    def F(b):
        t = Thermo(1.0, b)
        return free_energy_ti(t, h_star(k, t))

    lo = math.atanh(1 / k) + 0.1
    for b in np.linspace(lo, 2.5, 10):
        t = Thermo(1.0, float(b))
        assert entropy_ti(t, h_star(k, t), k) == pytest.approx(entropy_fd(F, float(b)), abs=1e-5)


def test_entropy_k2_matches_finite_difference():
    for b in np.linspace(0.6, 2.0, 10):
        fd = entropy_fd(lambda x: free_energy_k2_closed(Thermo(1.0, x)), float(b))
        assert entropy_k2_closed(Thermo(1.0, float(b))) == pytest.approx(fd, abs=1e-5)


# --- monotonicity of sphere averages --------------------------------------------

def test_monotonicity_constant():
    rep = an_monotonicity(ConstantField(0.4), TreeGeometry(3), T1, 1, 12)
    assert rep.verdict == "constant" and rep.monotone


def test_monotonicity_zachary():
    rep = an_monotonicity(zachary_field(0.5, 2, T1, 20), TreeGeometry(2), T1, 1, 20)
    assert rep.monotone and rep.hypothesis is True


def test_monotonicity_oscillating():
    rep = an_monotonicity(oscillating_field(20), TreeGeometry(2), T1, 1, 20)
    assert rep.verdict == "non-monotone"
    assert rep.hypothesis is False


# --- curves -------------------------------------------------------------------

def test_empty_curve():
    assert emit_curve(CurveSpec("ti-zero", 4)) == []


def test_curve_validation():
    with pytest.raises(DomainError):
        CurveSpec("bogus", 4)
    with pytest.raises(DomainError):
        CurveSpec("ti-zero", 4, grid=(1.0, 0.5))


@pytest.mark.parametrize("k", [4, 5, 6])
def test_figure1_branches_meet_at_threshold(k):
    bc = math.atanh(1 / k)
    grid = [bc - 0.05, bc + 1e-8, bc + 0.5]
    zero = emit_curve(CurveSpec("ti-zero", k, grid=grid))
    star = emit_curve(CurveSpec("ti-star", k, grid=grid))
    assert star[0].flag == "below-threshold" and star[0].F is None
    assert star[1].F == pytest.approx(zero[1].F, abs=1e-5)
    assert star[2].F < zero[2].F


def test_ti_star_parametric_in_h():
    pts = emit_curve(CurveSpec("ti-star", 2, grid=[0.0, 1.829136159423517], param="h"))
    assert pts[0].flag == "domain"
    assert pts[1].beta == pytest.approx(1.0, abs=1e-9)
    assert pts[1].F == pytest.approx(F_STAR_K2, abs=1e-9)


def test_figure4_ordering():
    grid = list(np.round(np.arange(0.02, 0.157, 0.01), 6))
    zero = emit_curve(CurveSpec("ti-zero", 4, grid=grid, param="alpha"))
    star = emit_curve(CurveSpec("ti-star", 4, grid=grid, param="alpha"))
    for branch in (1, 2):
        wp = emit_curve(CurveSpec("wp", 4, grid=grid, param="alpha", branch=branch))
        for z, s, w in zip(zero, star, wp):
            assert w.flag == "ok"
            assert s.F < w.F < z.F


def test_wp_curve_flags_above_alpha_cr():
    pts = emit_curve(CurveSpec("wp", 4, grid=[0.1, 0.2], param="alpha"))
    assert pts[0].flag == "ok" and pts[1].flag == "no-wp-solution"
    with pytest.raises(DomainError):
        emit_curve(CurveSpec("wp", 3, grid=[0.1], param="alpha"))
