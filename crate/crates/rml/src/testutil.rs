//! Shared fixtures for unit tests: the FSM model and its canonical
//! counterexample / nearest satisfying instance pair.

use crate::ast::Model;
use crate::bounds::build_bounds;
use crate::frontend::load_model;
use crate::instance::Instance;
use std::collections::{BTreeMap, BTreeSet};

pub const FSM_SRC: &str = include_str!("../tests/fixtures/fsm.rml");

pub fn fsm_model() -> Model {
    load_model("fsm.rml", FSM_SRC).unwrap()
}

/// The counterexample at scope 5: a 4-state machine whose stop state
/// (State3) still transitions to State1.
pub fn fsm_cex(model: &Model) -> Instance {
    let bounds = build_bounds(model, 5);
    let mut sig_contents: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    sig_contents.insert("FSM".into(), BTreeSet::from(["FSM0".to_string()]));
    sig_contents.insert(
        "State".into(),
        ["State0", "State1", "State2", "State3"].iter().map(|s| s.to_string()).collect(),
    );
    let mut field_contents: BTreeMap<String, BTreeSet<(String, String)>> = BTreeMap::new();
    field_contents.insert("start".into(), BTreeSet::from([("FSM0".to_string(), "State0".to_string())]));
    field_contents.insert("stop".into(), BTreeSet::from([("FSM0".to_string(), "State3".to_string())]));
    field_contents.insert(
        "transition".into(),
        [("State0", "State1"), ("State0", "State3"), ("State1", "State2"), ("State2", "State3"), ("State3", "State1")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
    );
    Instance { universe: bounds.universe, sig_contents, field_contents }
}

/// The nearest satisfying instance: the cex minus the State3 -> State1 edge.
pub fn fsm_sat(model: &Model) -> Instance {
    let mut inst = fsm_cex(model);
    inst.field_contents
        .get_mut("transition")
        .unwrap()
        .remove(&("State3".to_string(), "State1".to_string()));
    inst
}
