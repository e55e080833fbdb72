import json

import pytest

from vtreid.config import (
    PRESETS,
    config_from_dict,
    config_hash,
    load_config,
    resolved_dict,
    verify_config_stamp,
    write_config_stamp,
)
from vtreid.errors import ValidationError


def test_defaults_carry_documented_training_values():
    cfg = config_from_dict({})
    assert cfg.translate.lr == 2e-4
    assert cfg.translate.batch_size == 16
    assert cfg.translate.epochs == 6
    assert cfg.reid.lr_high == 0.1
    assert cfg.reid.lr_low == 0.01
    assert cfg.reid.epochs_high == 50
    assert cfg.reid.epochs_low == 5
    assert cfg.reid.batch_size == 16
    assert cfg.translate.lambda_cyc == 10.0
    assert cfg.translate.lambda_id == 5.0
    assert cfg.translate.lambda_style == 1.0


def test_toml_loading_and_overrides(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(
        """
seed = 12
out_dir = "runs/x"

[translate]
lambda_id = 2.0

[reid]
head = "baseline"
""",
        encoding="utf-8",
    )
    cfg = load_config(path, out_dir="elsewhere", seed=99)
    assert cfg.seed == 99
    assert cfg.out_dir == "elsewhere"
    assert cfg.translate.lambda_id == 2.0
    assert cfg.reid.head == "baseline"


def test_unknown_keys_rejected():
    with pytest.raises(ValidationError, match="mystery"):
        config_from_dict({"translate": {"mystery": 1}})
    with pytest.raises(ValidationError, match="top level"):
        config_from_dict({"unknown_section": {}})


@pytest.mark.parametrize(
    "raw,field",
    [
        ({"translate": {"lambda_id": -1}}, "translate.lambda_id"),
        ({"translate": {"lr": 0}}, "translate.lr"),
        ({"reid": {"momentum": 1.5}}, "reid.momentum"),
        ({"reid": {"image_size": 60}}, "reid.image_size"),
        ({"evaluate": {"metric": "hamming"}}, "evaluate.metric"),
        ({"seed": -4}, "seed"),
        ({"synthetic": {"n_identities": 1}}, "synthetic.n_identities"),
    ],
)
def test_validation_names_offending_field(raw, field):
    with pytest.raises(ValidationError, match=field.replace(".", r"\.")):
        config_from_dict(raw)


def test_presets_merge_under_file_values():
    cfg = config_from_dict({"preset": "paper-scale", "reid": {"batch_size": 4}})
    assert cfg.reid.image_size == 224  # from the preset
    assert cfg.reid.batch_size == 4  # file wins
    assert set(PRESETS) == {"desk-scale", "paper-scale"}


def test_hash_is_stable_and_sensitive():
    a = config_from_dict({"seed": 1})
    b = config_from_dict({"seed": 1})
    c = config_from_dict({"seed": 2})
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)


def test_resolved_dict_round_trips_through_json():
    cfg = config_from_dict({"evaluate": {"methods": [{"label": "m", "checkpoint": "c"}]}})
    data = resolved_dict(cfg)
    assert json.loads(json.dumps(data)) == data
    assert data["evaluate"]["methods"][0]["label"] == "m"


def test_config_stamp_verification(tmp_path):
    cfg = config_from_dict({"seed": 5, "out_dir": str(tmp_path)})
    write_config_stamp(tmp_path, cfg, "gen-data")
    assert verify_config_stamp(tmp_path)
    stamp_path = tmp_path / "vtreid-config.json"
    tampered = json.loads(stamp_path.read_text())
    tampered["config"]["seed"] = 6
    stamp_path.write_text(json.dumps(tampered))
    assert not verify_config_stamp(tmp_path)


def test_missing_config_file():
    with pytest.raises(ValidationError, match="not found"):
        load_config("definitely/not/here.toml")


def test_invalid_toml(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("seed = [unclosed", encoding="utf-8")
    with pytest.raises(ValidationError, match="TOML"):
        load_config(path)
