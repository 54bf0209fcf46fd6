import json

from click.testing import CliRunner

from pointgen.cli import main
from pointgen.geometry import HalfCylinderRange, sample_test_targets
from pointgen.study import (
    ResponseRecord,
    StudyConfig,
    StudyStore,
    create_session,
    next_trial,
    submit_response,
)

RANGE = HalfCylinderRange((0.1, 0.9), (-1.0, 1.0), (0.45, 0.75))


def test_help_lists_commands():
    result = CliRunner().invoke(main, ["--help"])
    assert result.exit_code == 0
    assert "serve-study" in result.output
    assert "export" in result.output


def test_export_writes_csv(tmp_path):
    pool = sample_test_targets(RANGE, n=20, seed=0)
    config = StudyConfig(models=["a", "b"], pool=pool, distractor_range=RANGE,
                         naturalness_trials=2, accuracy_trials=2)
    store = StudyStore(tmp_path / "store")
    session = create_session(config, "alice")
    store.record_session(session)
    while (trial := next_trial(session)) is not None:
        if trial.stage == 1:
            rec = ResponseRecord(session.session_id, trial.trial_id, rating=4)
        else:
            rec = ResponseRecord(session.session_id, trial.trial_id,
                                 choice=trial.target_slot, motion_finished=True)
        submit_response(session, rec, store)

    out = tmp_path / "records.csv"
    result = CliRunner().invoke(
        main, ["export", "--store", str(tmp_path / "store"),
               "--out", str(out)])
    assert result.exit_code == 0, result.output
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("participant,model,stage,condition,value")
    assert len(lines) == 1 + len(session.trials)


def test_serve_study_rejects_missing_config(tmp_path):
    result = CliRunner().invoke(
        main, ["serve-study", "--config", str(tmp_path / "nope.json")])
    assert result.exit_code != 0
