use manet_sim::config::{parse_config_text, parse_overrides, KEYS};
use manet_sim::{Protocol, ScenarioConfig};

const DEFAULT_CFG: &str = include_str!("../../../configs/default.cfg");

#[test]
fn shipped_config_is_the_default() {
    let c = ScenarioConfig::from_sources(Some(DEFAULT_CFG), &[]).unwrap();
    assert_eq!(c, ScenarioConfig::default());
}

#[test]
fn shipped_config_lists_every_key_once() {
    let mut keys: Vec<String> = parse_config_text(DEFAULT_CFG).unwrap().into_iter().map(|(k, _)| k).collect();
    keys.push("flow_pairs".into());
    keys.sort();
    let mut all: Vec<String> = KEYS.iter().map(|s| s.to_string()).collect();
    all.sort();
    assert_eq!(keys, all);
}

#[test]
fn command_line_beats_file() {
    let args: Vec<String> = ["--protocol", "dsdv", "--nodes", "30"].iter().map(|s| s.to_string()).collect();
    let c = ScenarioConfig::from_sources(Some(DEFAULT_CFG), &parse_overrides(&args).unwrap()).unwrap();
    assert_eq!(c.protocol, Protocol::Dsdv);
    assert_eq!(c.nodes, 30);
    assert_eq!(c.horizon, 200.0);
}

#[test]
fn later_lines_win() {
    let c = ScenarioConfig::from_sources(Some("seed = 3\nseed = 4\n"), &[]).unwrap();
    assert_eq!(c.seed, 4);
}

#[test]
fn diagnostics_name_the_key() {
    for (text, key) in [
        ("nodes = 0", "nodes"),
        ("speed = 0", "speed"),
        ("range = -5", "range"),
        ("collisions = maybe", "collisions"),
        ("protocol = olsr", "protocol"),
        ("horizon = inf", "horizon"),
        ("flow_start = 300", "flow_start"),
        ("ttl = 300", "ttl"),
    ] {
        let e = ScenarioConfig::from_sources(Some(text), &[]).unwrap_err();
        assert_eq!(e.key(), Some(key), "{text}: {e}");
        assert!(e.to_string().contains(key));
    }
    let e = ScenarioConfig::from_sources(Some("nodez = 3"), &[]).unwrap_err();
    assert_eq!(e.to_string(), "unknown key `nodez`");
}
