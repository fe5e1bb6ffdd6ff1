import json

import numpy as np
import pytest
import scipy.linalg as sla

from coupledheat import analyzer as az
from coupledheat import semigroup as sg
from coupledheat.forms import Scenario
from coupledheat.lattice import OrderInterval, Subspace, make_subspace

FAST = az.SimConfig(n=16, t_end=0.4, n_random=8, witness_n_random=40,
                    decay_dt=0.01, decay_t_end=2.0)


def predict_map(scenario, targets=None):
    targets = targets or az.default_targets(scenario)
    return {p.property: p for p in az.predict(scenario, targets)}


# ---------------------------------------------------------------------------
# presets


def test_preset_kirchhoff_projection():
    scenario = az.preset("kirchhoff", 2)
    np.testing.assert_allclose(scenario.y_left.projection,
                               [[0.5, 0.5], [0.5, 0.5]], atol=1e-14)
    np.testing.assert_allclose(scenario.y_right.projection,
                               scenario.y_left.projection, atol=1e-14)


def test_preset_dirichlet_projection_zero():
    scenario = az.preset("dirichlet", 3)
    np.testing.assert_array_equal(scenario.y_left.projection,
                                  np.zeros((3, 3)))


def test_preset_robin_scalar():
    scenario = az.preset("robin", 1, rho=1.0)
    assert scenario.y_left.dim == 1
    np.testing.assert_array_equal(scenario.s_left, [[1.0]])


def test_preset_anti_kirchhoff_m1_is_dirichlet_like():
    scenario = az.preset("anti_kirchhoff", 1)
    assert scenario.y_left.dim == 0


def test_preset_unknown_name():
    with pytest.raises(ValueError):
        az.preset("periodic", 2)


# ---------------------------------------------------------------------------
# predictions


def test_kirchhoff_m3_predictions():
    preds = predict_map(az.preset("kirchhoff", 3))
    assert preds["positivity"].predicted is True
    assert preds["linf_contraction"].predicted is True
    assert preds["irreducibility"].predicted is True
    assert preds["decay"].predicted is False  # constants along span{1}


def test_anti_kirchhoff_threshold_predictions():
    for m, linf in ((1, True), (2, True), (3, False)):
        preds = predict_map(az.preset("anti_kirchhoff", m))
        assert preds["linf_contraction"].predicted is linf, m
        if m >= 2:
            assert preds["positivity"].predicted is False


def test_mixed_dn_predicted_stable():
    preds = predict_map(az.preset("mixed_dn", 2))
    assert preds["decay"].predicted is True


def test_robin_predictions():
    preds = predict_map(az.preset("robin", 2, rho=1.0))
    assert preds["positivity"].predicted is True
    assert preds["linf_contraction"].predicted is True
    assert preds["decay"].predicted is True
    # negative Robin coefficient keeps positivity but gives up the box
    preds = predict_map(az.preset("robin", 1, rho=-1.0))
    assert preds["positivity"].predicted is True
    assert preds["linf_contraction"].predicted is False


def test_prediction_determinism():
    scenario = az.preset("anti_kirchhoff", 3)
    first = az.predict(scenario, az.default_targets(scenario))
    second = az.predict(scenario, az.default_targets(scenario))
    assert [p.to_dict() for p in first] == [p.to_dict() for p in second]


def test_nonlocal_diffusion_flagged_necessary_only():
    d = np.array([[2.0, 1.0], [1.0, 2.0]])
    scenario = Scenario(m=2, diffusion=d, s_left=np.zeros((2, 2)),
                        s_right=np.zeros((2, 2)), y_left=Subspace.full(2),
                        y_right=Subspace.full(2))
    preds = predict_map(scenario)
    assert preds["positivity"].predicted is None
    assert preds["positivity"].mode == az.MODE_NECESSARY_ONLY
    assert preds["irreducibility"].mode == az.MODE_INAPPLICABLE
    # necessary condition failing still decides the prediction
    scenario2 = Scenario(m=2, diffusion=d, s_left=np.zeros((2, 2)),
                         s_right=np.zeros((2, 2)),
                         y_left=az.preset("anti_kirchhoff", 2).y_left,
                         y_right=az.preset("anti_kirchhoff", 2).y_right)
    preds2 = predict_map(scenario2)
    assert preds2["positivity"].predicted is False
    assert preds2["positivity"].mode == az.MODE_NECESSARY_ONLY


def test_subspace_invariance_prediction():
    scenario = az.preset("kirchhoff", 2)
    diag = make_subspace([[1.0, 1.0]])
    axis = make_subspace([[1.0, 0.0]])
    preds = az.predict(scenario, [az.SubspaceTarget(diag),
                                  az.SubspaceTarget(axis)])
    assert preds[0].predicted is True
    assert preds[1].predicted is False


# ---------------------------------------------------------------------------
# matrix-exponential checks of the generator criteria


def expm_positive(s, ts=(1e-3, 0.05, 0.3, 1.0)):
    # short times included: a positive off-diagonal entry of S only breaks
    # positivity of exp(-tS) for t below |S_ij| / |(S^2)_ij|
    return all(sla.expm(-t * s).min() >= -1e-9 for t in ts)


def expm_box_invariant(s, ts=(1e-3, 0.05, 0.3, 1.0)):
    return all(np.abs(sla.expm(-t * s)).sum(axis=1).max() <= 1 + 1e-9
               for t in ts)


def _bounded_away(values, floor):
    return np.where(np.abs(values) < floor, floor * np.sign(values) + (
        values == 0) * floor, values)


def test_generator_positivity_criterion_is_biconditional():
    rng = np.random.default_rng(7)
    orthant = OrderInterval.nonnegative(3)
    seen = {True: 0, False: 0}
    for _ in range(60):
        s = rng.standard_normal((3, 3))
        if rng.random() < 0.5:
            s = np.abs(np.diag(np.diag(s))) - np.abs(s - np.diag(np.diag(s)))
        # keep off-diagonal magnitudes away from 0 so that the sampled
        # matrix exponential resolves the sign
        off = s - np.diag(np.diag(s))
        off = _bounded_away(off, 0.05)
        np.fill_diagonal(off, 0.0)
        s = np.diag(np.diag(s)) + off
        crit = az._generator_leaves_interval(s, orthant)
        assert crit == expm_positive(s)
        seen[crit] += 1
    assert min(seen.values()) > 5  # both outcomes exercised


def test_generator_box_criterion_sound_and_tight_within_class():
    rng = np.random.default_rng(8)
    box = OrderInterval.symmetric_box(3)
    seen = {True: 0, False: 0}
    for _ in range(60):
        diag = np.abs(rng.standard_normal(3)) * 2
        off = -np.abs(rng.standard_normal((3, 3))) * 0.7
        np.fill_diagonal(off, 0.0)
        rowsum = diag + off.sum(axis=1)
        # push row sums away from the boundary of the criterion
        diag = diag + np.where(np.abs(rowsum) < 0.1,
                               0.2 * np.sign(rowsum) + (rowsum == 0) * 0.2,
                               0.0)
        s = np.diag(diag) + off
        crit = az._generator_leaves_interval(s, box)
        # off-diagonals <= 0: criterion reduces to row sums >= 0 and is
        # exactly the matrix-exponential behavior
        assert crit == expm_box_invariant(s)
        seen[bool(crit)] += 1
    assert min(seen.values()) > 5


def test_generator_subspace_criterion_matches_expm():
    rng = np.random.default_rng(9)
    c = make_subspace([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    p, q = c.projection, np.eye(3) - c.projection
    for _ in range(40):
        s = rng.standard_normal((3, 3))
        if rng.random() < 0.5:
            s = p @ s @ p + q @ s @ q  # block structure: invariant
        algebraic = np.abs(q @ s @ p).max() <= 1e-10
        exm = all(
            np.abs(q @ (sla.expm(-t * s) @ c.basis)).max() <= 1e-9
            for t in (0.05, 0.4, 1.0))
        assert algebraic == exm


# ---------------------------------------------------------------------------
# domination predictions


def coordinate_scenario():
    # Y = {0} x R inside R^2, an ideal of W
    y = make_subspace([[0.0, 1.0]])
    return Scenario(m=2, diffusion=1.0, s_left=np.zeros((2, 2)),
                    s_right=np.zeros((2, 2)), y_left=y, y_right=y,
                    name="coordinate")


def test_domination_predictions():
    neumann2 = az.preset("neumann", 2)
    pred = az.predict(coordinate_scenario(),
                      [az.DominationTarget(neumann2)])[0]
    assert pred.predicted is True
    pred = az.predict(az.preset("kirchhoff", 2),
                      [az.DominationTarget(neumann2)])[0]
    assert pred.predicted is False  # span{1} is not an ideal of W
    pred = az.predict(az.preset("dirichlet", 1),
                      [az.DominationTarget(az.preset("robin", 1, rho=2.0))])[0]
    assert pred.predicted is True
    pred = az.predict(az.preset("robin", 1, rho=2.0),
                      [az.DominationTarget(az.preset("robin", 1, rho=1.0))])[0]
    assert pred.predicted is True
    # reversed Robin pair: difference has the wrong sign
    pred = az.predict(az.preset("robin", 1, rho=1.0),
                      [az.DominationTarget(az.preset("robin", 1, rho=2.0))])[0]
    assert pred.predicted is False


def test_domination_inapplicable_without_positive_dominating():
    pred = az.predict(az.preset("dirichlet", 2),
                      [az.DominationTarget(az.preset("anti_kirchhoff", 2))])[0]
    assert pred.predicted is None
    assert pred.mode == az.MODE_INAPPLICABLE


def test_scalar_domination_predictions():
    pred = az.predict(az.preset("robin", 3, rho=0.5),
                      [az.ScalarDominationTarget()])[0]
    assert pred.predicted is True
    pred = az.predict(az.preset("kirchhoff", 3),
                      [az.ScalarDominationTarget()])[0]
    assert pred.predicted is None


# ---------------------------------------------------------------------------
# verification


def test_verify_kirchhoff_m2_all_rows():
    scenario = az.preset("kirchhoff", 2)
    report = az.verify(scenario, az.predict(scenario,
                                            az.default_targets(scenario)),
                       FAST)
    verdicts = {row.prediction.property: row.verdict for row in report.rows}
    assert verdicts == {
        "positivity": az.VERDICT_CONFIRMED,
        "linf_contraction": az.VERDICT_CONFIRMED,
        "irreducibility": az.VERDICT_CONFIRMED,
        "decay": az.VERDICT_CONFIRMED,  # predicted unstable, plateau found
    }


def test_verify_neumann_reducibility_witnessed():
    scenario = az.preset("neumann", 2)
    report = az.verify(scenario,
                       az.predict(scenario, [az.IrreducibilityTarget()]),
                       FAST)
    row = report.rows[0]
    assert row.prediction.predicted is False
    assert row.verdict == az.VERDICT_CONFIRMED
    assert row.observation.witness is not None


def test_verify_forced_wrong_prediction_is_refuted():
    scenario = az.preset("anti_kirchhoff", 3)
    preds = az.predict(scenario, [az.linf_target(3)])
    assert preds[0].predicted is False
    preds[0].predicted = True  # deliberately mis-specified
    report = az.verify(scenario, preds, FAST)
    assert report.rows[0].verdict == az.VERDICT_REFUTED
    assert report.has_refutation()


def test_verify_row_error_does_not_abort_report():
    scenario = az.preset("kirchhoff", 2)
    preds = az.predict(scenario, [az.positivity_target(2),
                                  az.positivity_target(2)])
    preds[1].target = az.DominationTarget(az.preset("neumann", 3))
    preds[1].predicted = True
    report = az.verify(scenario, preds, FAST)
    assert report.rows[0].verdict == az.VERDICT_CONFIRMED
    assert "error" in report.rows[1].observation.evidence
    assert report.rows[1].verdict == az.VERDICT_INAPPLICABLE


def test_verify_domination_rows():
    neumann2 = az.preset("neumann", 2)
    scenario = coordinate_scenario()
    report = az.verify(scenario,
                       az.predict(scenario, [az.DominationTarget(neumann2)]),
                       FAST)
    assert report.rows[0].verdict == az.VERDICT_CONFIRMED

    kirchhoff = az.preset("kirchhoff", 2)
    report = az.verify(kirchhoff,
                       az.predict(kirchhoff, [az.DominationTarget(neumann2)]),
                       FAST)
    row = report.rows[0]
    assert row.prediction.predicted is False
    assert row.verdict == az.VERDICT_CONFIRMED  # violation witnessed
    assert row.observation.witness is not None


def test_domination_monotone_composition():
    # dirichlet <= robin(2) <= robin(1): the composed numerical check holds
    mid = az.preset("robin", 1, rho=2.0)
    top = az.preset("robin", 1, rho=1.0)
    bottom = az.preset("dirichlet", 1)
    p1 = az.predict(bottom, [az.DominationTarget(mid)])[0]
    p2 = az.predict(mid, [az.DominationTarget(top)])[0]
    assert p1.predicted is True and p2.predicted is True
    report = az.verify(bottom, az.predict(bottom,
                                          [az.DominationTarget(top)]), FAST)
    assert report.rows[0].verdict == az.VERDICT_CONFIRMED


def test_verify_scalar_domination_row():
    scenario = az.preset("robin", 3, rho=0.5)
    report = az.verify(scenario,
                       az.predict(scenario, [az.ScalarDominationTarget()]),
                       FAST)
    assert report.rows[0].verdict == az.VERDICT_CONFIRMED


def test_verify_stability_rows():
    stable = az.preset("mixed_dn", 1)
    report = az.verify(stable,
                       az.predict(stable, [az.StabilityTarget()]), FAST)
    row = report.rows[0]
    assert row.verdict == az.VERDICT_CONFIRMED
    assert row.observation.evidence["rate"] > 1.0
    assert row.observation.evidence["discrete_kernel_dim"] == 0


def test_preset_matrix_no_refutations():
    # the algebraic characterizations hold at the discrete level too
    config = az.SimConfig(n=12, t_end=0.3, n_random=5, witness_n_random=25,
                          decay_dt=0.01, decay_t_end=1.5)
    for name in ("dirichlet", "neumann", "kirchhoff", "anti_kirchhoff"):
        for m in (1, 2, 3):
            scenario = az.preset(name, m)
            report = az.verify(
                scenario,
                az.predict(scenario, az.default_targets(scenario)), config)
            bad = [r for r in report.rows
                   if r.verdict == az.VERDICT_REFUTED]
            assert not bad, (name, m, [r.prediction.property for r in bad])


def test_predicted_positive_scenarios_preserve_nonnegativity():
    # whenever positivity is predicted, implicit Euler with lumped mass
    # keeps 50 random nonnegative data above -1e-10
    from coupledheat.forms import assemble, build_mesh
    y_coord = make_subspace([[0.0, 1.0, 0.0]])
    pool = [
        az.preset("kirchhoff", 3),
        az.preset("robin", 2, rho=1.5),
        az.preset("robin", 1, rho=-0.5),
        az.preset("mixed_dn", 2),
        Scenario(m=3, diffusion=np.diag([1.0, 2.0, 0.5]),
                 s_left=np.array([[1.0, -0.2, 0.0], [-0.1, 1.0, -0.3],
                                  [0.0, -0.2, 1.0]]),
                 s_right=np.zeros((3, 3)), y_left=Subspace.full(3),
                 y_right=y_coord, gamma=0.5),
    ]
    mesh = build_mesh(16)
    rng = np.random.default_rng(12)
    checked = 0
    for scenario in pool:
        pred = az.predict(scenario, [az.positivity_target(scenario.m)])[0]
        if pred.predicted is not True:
            continue
        checked += 1
        form = assemble(scenario, mesh)
        data = sg.random_fields(mesh, scenario.m, 50, rng, "nonnegative")
        obs = sg.sweep_interval(form, data,
                                OrderInterval.nonnegative(scenario.m),
                                dt=mesh.h_max**2 / 2, t_end=0.5, tol=1e-10)
        assert obs.holds, scenario.name
    assert checked >= 4


def test_subspace_invariance_witnessed_when_predicted_false():
    scenario = az.preset("kirchhoff", 2)
    axis = make_subspace([[1.0, 0.0]])
    preds = az.predict(scenario, [az.SubspaceTarget(axis)])
    assert preds[0].predicted is False
    report = az.verify(scenario, preds, FAST)
    assert report.rows[0].verdict == az.VERDICT_CONFIRMED
    assert report.rows[0].observation.witness is not None


def test_presets_with_zero_s_are_symmetric():
    from coupledheat.forms import assemble, build_mesh, form_diagnostics
    for name in az.PRESET_NAMES:
        for m in (1, 3):
            scenario = az.preset(name, m)
            form = assemble(scenario, build_mesh(8))
            assert form_diagnostics(form).symmetric, (name, m)
            a_c = form.operator().toarray()
            assert np.abs(a_c - a_c.T).max() <= 1e-12 * max(
                np.abs(a_c).max(), 1.0)


def test_report_serializes_to_json():
    scenario = az.preset("kirchhoff", 2)
    report = az.verify(scenario,
                       az.predict(scenario, az.default_targets(scenario)),
                       FAST)
    payload = report.to_dict()
    text = json.dumps(payload, sort_keys=True, allow_nan=False)
    assert "confirmed" in text
    assert payload["summary"][az.VERDICT_CONFIRMED] == len(report.rows)
