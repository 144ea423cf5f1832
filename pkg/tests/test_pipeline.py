import csv
import json

import numpy as np
import pytest

from flowgauntlet.advcraft import (
    AdversarialBatch,
    CwConfig,
    GanConfig,
    cw_batch,
    touched_columns,
    write_attack_manifest,
)
from flowgauntlet.errors import DataError, EmptyInput
from flowgauntlet.flowdata import FEATURES
from flowgauntlet.hyperopt import DT_SPACE, classifier_fitness_fn
from flowgauntlet.models import RfParams, train_random_forest
from flowgauntlet.pipeline import (
    CampaignConfig,
    CampaignReport,
    CampaignRow,
    GaConfig,
    SyntheticSpec,
    TargetSpec,
    adversarial_retrain,
    augment,
    campaign_csv_text,
    config_hash,
    emit_report,
    generate_synthetic_flows,
    prepare_inputs,
    read_campaign_csv,
    run_attack_campaign,
    write_manifest,
)
from flowgauntlet.pipeline.campaign import _evaluate

I = {f: i for i, f in enumerate(FEATURES)}

CFG = CampaignConfig(
    features=("Dur", "SrcBytes"),
    checkpoints=(5, 100),
    synthetic=SyntheticSpec(n_benign=250, n_malware=250, seed=0),
    cw=CwConfig(c=50.0, learning_rate=0.01),
    targets=(TargetSpec("rf", "random_forest", {"n_estimators": 10}),
             TargetSpec("dt", "decision_tree", {"max_depth": 5})),
    max_samples=60,
)


@pytest.fixture(scope="module")
def inputs():
    return prepare_inputs(CFG)


@pytest.fixture(scope="module")
def report(inputs):
    return run_attack_campaign(CFG, inputs)


# -- synthetic data ----------------------------------------------------------

def test_synthetic_identities():
    ds = generate_synthetic_flows(SyntheticSpec(n_benign=500, n_malware=500, seed=3))
    X = ds.X
    assert np.all(X[:, I["TotBytes"]] - X[:, I["SrcBytes"]] - X[:, I["DstBytes"]] == 0)
    assert np.all(X[:, I["sTtl"]] == 255 - X[:, I["sHops"]])
    rel = np.abs(X[:, I["Rate"]] * X[:, I["Dur"]] - X[:, I["TotBytes"]]) / X[:, I["TotBytes"]]
    assert rel.max() < 1e-9
    ds.records()  # every row passes the flow-record checks
    assert np.bincount(ds.y).tolist() == [500, 500]


def test_synthetic_deterministic_and_seeded():
    a, b = generate_synthetic_flows(SyntheticSpec(seed=4)), generate_synthetic_flows(SyntheticSpec(seed=4))
    assert a.X.tobytes() == b.X.tobytes()
    assert not np.array_equal(a.X, generate_synthetic_flows(SyntheticSpec(seed=5)).X)


def test_synthetic_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(n_benign=0)
    with pytest.raises(ValueError):
        SyntheticSpec(benign={"Dur": (1.0, 1.0)})


# -- campaign ----------------------------------------------------------------

def test_campaign_config_validation():
    with pytest.raises(ValueError):
        CampaignConfig(checkpoints=(5, 5))
    with pytest.raises(ValueError):
        CampaignConfig(attack="fgsm")
    with pytest.raises(ValueError):
        CampaignConfig(targets=(TargetSpec("a"), TargetSpec("a")))


def test_pool_is_detected_malware(inputs):
    assert 0 < len(inputs.pool) <= 60
    assert np.all(inputs.surrogate.predict_array(inputs.pool) == 1)


def test_campaign_shape_and_ranges(report):
    assert len(report) == 4
    assert [(r.feature, r.checkpoint) for r in report.rows] == [
        ("Dur", 5), ("Dur", 100), ("SrcBytes", 5), ("SrcBytes", 100)]
    assert report.target_names == ("rf", "dt")
    for r in report.rows:
        assert not r.failed and r.mean_l2 >= 0
        assert 0 <= r.surrogate_misclass <= 1
        assert r.n_transfer == round(r.surrogate_misclass * r.n)
        for v in r.target_misclass.values():
            assert v is None or 0 <= v <= 1


def test_campaign_deterministic(inputs, report):
    again = run_attack_campaign(CFG, inputs)
    assert campaign_csv_text(again) == campaign_csv_text(report)


def test_noise_only_override(inputs):
    cfg = CampaignConfig(**{**CFG.__dict__, "iterations_override": 0, "checkpoints": (5,),
                            "features": ("Dur",)})
    rep = run_attack_campaign(cfg, inputs)
    batch = rep.batches[0]
    direct = cw_batch(inputs.surrogate, inputs.scaler, inputs.pool, 0, "Dur", inputs.bounds,
                      seed=[cfg.seed, 0], cfg=cfg.cw, checkpoints=[0])[0]
    np.testing.assert_array_equal(batch.perturbed, direct.perturbed)
    orig = inputs.scaler.inverse_array(batch.originals)
    pert = inputs.scaler.inverse_array(batch.perturbed)
    keep = [j for j in range(9) if j not in touched_columns("Dur")]
    np.testing.assert_array_equal(batch.perturbed[:, keep], batch.originals[:, keep])
    assert rep.rows[0].mean_l2 == pytest.approx(
        np.mean(np.linalg.norm(pert - orig, axis=1)), rel=1e-9)


def test_identical_batch_matches_baseline(inputs):
    batch = AdversarialBatch(inputs.pool, inputs.pool.copy(), "Dur", 0, 0.0, 0.0)
    row = _evaluate(batch, inputs, on_successful=False)
    assert row.mean_l2 == 0.0
    for name, model in inputs.targets.items():
        assert row.target_misclass[name] == pytest.approx(np.mean(model.predict_array(inputs.pool) == 0))


def test_failed_feature_does_not_abort(inputs):
    cfg = CampaignConfig(**{**CFG.__dict__, "features": ("Bogus", "Dur")})
    rep = run_attack_campaign(cfg, inputs)
    assert len(rep) == 4
    assert all(r.failed for r in rep.rows[:2]) and not any(r.failed for r in rep.rows[2:])


def test_transfer_all_mode(inputs):
    cfg = CampaignConfig(**{**CFG.__dict__, "transfer_on_successful": False, "features": ("Dur",)})
    rep = run_attack_campaign(cfg, inputs)
    assert rep.transfer_subset == "all"
    assert all(r.n_transfer == r.n for r in rep.rows)


def test_gan_campaign(inputs, tmp_path):
    gan = GanConfig(latent_dim=8, gen_hidden=16, disc_hidden=16, epochs=1, learning_rate=1e-3)
    cfg = CampaignConfig(**{**CFG.__dict__, "attack": "gan", "gan": gan, "checkpoints": (1, 3)})
    rep = run_attack_campaign(cfg, inputs, batch_dir=tmp_path)
    assert len(rep) == 4 and not any(r.failed for r in rep.rows)
    assert [p.name for p in rep.batch_files] == ["adv_gan_Dur.csv", "adv_gan_SrcBytes.csv"]
    with open(rep.batch_files[0], newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["origin"] for r in rows} == {"gan"}
    assert {r["checkpoint"] for r in rows} == {"1", "3"}
    assert {r["Label"] for r in rows} == {"1"}


def test_attack_manifest(tmp_path):
    p = write_attack_manifest(tmp_path / "m.json", CFG, {"seed": 0}, feature="Dur")
    doc = json.loads(p.read_text())
    assert doc["config"]["cw"]["c"] == 50.0 and doc["feature"] == "Dur"


# -- report ------------------------------------------------------------------

def _fake_report(features=("Dur", "SrcBytes"), checkpoints=(5, 100, 750, 1000, 2000)):
    rows = [CampaignRow(f, k, float(k) / 10, min(1.0, k / 2000), {"rf": 0.5}, 10)
            for f in features for k in checkpoints]
    return CampaignReport(rows=rows, target_names=("rf",))


def test_emit_report_schema(tmp_path):
    files = emit_report(_fake_report(), tmp_path)
    assert sorted(p.name for p in files) == ["Dur.svg", "SrcBytes.svg", "campaign.csv"]
    lines = (tmp_path / "campaign.csv").read_text().splitlines()
    assert lines[0] == "feature,checkpoint,mean_l2,surrogate_misclass,target_model,target_misclass,n"
    assert len(lines) == 11
    assert (tmp_path / "Dur.svg").read_text().startswith("<svg")


def test_emit_report_rerun_identical(tmp_path):
    emit_report(_fake_report(), tmp_path / "a")
    emit_report(_fake_report(), tmp_path / "b")
    assert (tmp_path / "a/campaign.csv").read_bytes() == (tmp_path / "b/campaign.csv").read_bytes()


def test_emit_empty_report(tmp_path):
    with pytest.raises(EmptyInput):
        emit_report(CampaignReport(rows=[]), tmp_path / "out")
    assert not (tmp_path / "out").exists()


def test_campaign_csv_round_trip(tmp_path, report):
    emit_report(report, tmp_path)
    back = read_campaign_csv(tmp_path / "campaign.csv")
    assert campaign_csv_text(back) == campaign_csv_text(report)


def test_failed_rows_render_blank(tmp_path):
    rep = CampaignReport(rows=[CampaignRow("Dur", 5, None, None, {"rf": None}, 0, error="x")],
                         target_names=("rf",))
    emit_report(rep, tmp_path)
    assert (tmp_path / "campaign.csv").read_text().splitlines()[1] == "Dur,5,,,rf,,0"
    assert read_campaign_csv(tmp_path / "campaign.csv").rows[0].failed


def test_read_bad_header(tmp_path):
    (tmp_path / "c.csv").write_text("a,b\n")
    with pytest.raises(DataError):
        read_campaign_csv(tmp_path / "c.csv")


def test_manifest_deterministic(tmp_path):
    art = tmp_path / "x.csv"
    art.write_text("1\n")
    a = write_manifest(tmp_path / "a.json", CFG, 0, [art], command="campaign").read_bytes()
    b = write_manifest(tmp_path / "b.json", CFG, 0, [art], command="campaign").read_bytes()
    assert a == b
    doc = json.loads(a)
    assert doc["config_sha256"] == config_hash(CFG) and "x.csv" in doc["artifacts"]
    assert config_hash(CFG) != config_hash(CampaignConfig())


# -- retraining --------------------------------------------------------------

def test_augment_labels(inputs):
    adv = inputs.pool[:5]
    aug = augment(inputs.train, adv)
    assert len(aug) == len(inputs.train) + 5
    assert np.all(aug.y[-5:] == 1)
    assert augment(inputs.train, np.empty((0, 9))) is inputs.train


def test_empty_adversarial_is_plain_tuning(inputs):
    ga = GaConfig(population=4, generations=2, seed=1)
    res = adversarial_retrain(inputs.train, np.empty((0, 9)), "dt", ga,
                              validation=inputs.validation, test=inputs.test)
    plain = ga.run(DT_SPACE, classifier_fitness_fn(inputs.train, inputs.validation, "dt", DT_SPACE))
    assert res.search.best == plain.best
    assert res.adversarial is None


def test_retrain_learns_adversarials(inputs, report):
    adv = np.vstack([b.perturbed for b in report.batches])
    before = train_random_forest(inputs.train, RfParams(n_estimators=10))
    res = adversarial_retrain(inputs.train, adv, "rf", GaConfig(population=4, generations=2),
                              validation=inputs.validation, test=inputs.test)
    assert res.adversarial.recall >= np.mean(before.predict_array(adv) == 1)
    assert res.adversarial.tp + res.adversarial.fn == len(adv)
