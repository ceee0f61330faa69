#![allow(dead_code)]

use std::path::{Path, PathBuf};

use capta::config::ProjectConfig;
use capta::project::{write_decision_log, Project};
use capta_core::resolution::{Decision, DecisionKind, DecisionLog};
use capta_core::synth::SynthParams;
use capta_core::EntityId;

/// Three persons; A on day one only, B and C on both days.
pub const ABC_CORPUS: &str = "1891-05-05\nCalled on Aziz, Boutros and Chaim.\n\n1891-05-06\nBoutros and Chaim came to dine.\n";

pub fn abc_entities() -> Vec<(&'static str, &'static str, Vec<&'static str>)> {
    vec![
        ("a", "Aziz", vec!["aziz"]),
        ("b", "Boutros", vec!["boutros"]),
        ("c", "Chaim", vec!["chaim"]),
    ]
}

pub fn new_entity(id: &str, name: &str, aliases: &[&str]) -> Decision {
    Decision {
        kind: DecisionKind::NewEntity {
            id: Some(EntityId::new(id)),
            display_name: name.into(),
            aliases: aliases.iter().map(|a| a.to_string()).collect(),
        },
        actor: "seed".into(),
        rationale: "known person".into(),
        timestamp: "2026-01-01T00:00:00Z".into(),
    }
}

/// A project directory holding one corpus volume, seed entities and a
/// config edited by `tweak`.
pub fn write_project(
    dir: &Path,
    corpus: &str,
    entities: &[(&str, &str, Vec<&str>)],
    tweak: impl FnOnce(&mut ProjectConfig),
) -> Project {
    std::fs::create_dir_all(dir.join("corpus")).unwrap();
    std::fs::write(dir.join("corpus/v01.txt"), corpus).unwrap();
    let mut log = DecisionLog::new();
    for (id, name, aliases) in entities {
        log.submit(new_entity(id, name, aliases)).unwrap();
    }
    write_decision_log(&dir.join(capta::project::ALIASES_LOG), &log).unwrap();
    let mut config = ProjectConfig::default();
    config.layout.forces.max_iterations = 300;
    tweak(&mut config);
    std::fs::write(dir.join(capta::config::CONFIG_FILE), config.to_toml()).unwrap();
    Project::open(dir).unwrap()
}

/// Small synthetic project: quick to run but large enough to exercise
/// filtering, communities and layout.
pub fn small_fixture(dir: &Path) -> Project {
    let params = SynthParams {
        days: 60,
        persons: 80,
        mean_per_day: 5.0,
        sd_per_day: 3.0,
        seed: 7,
        ..SynthParams::default()
    };
    capta::fixture::write_fixture_project(dir, &params).unwrap();
    Project::open(dir).unwrap()
}

/// Every file under `dir`, relative path → bytes.
pub fn snapshot(dir: &Path) -> std::collections::BTreeMap<PathBuf, Vec<u8>> {
    let mut out = std::collections::BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_file() {
            out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
        }
    }
    out
}
