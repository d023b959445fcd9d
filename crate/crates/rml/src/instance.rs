//! Concrete instances: a total assignment of every relation to a tuple set
//! over a fixed atom universe.

use crate::ast::{Model, Multiplicity};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// An element of a signature's pool, e.g. `State3`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub name: String,
    pub sig: String,
}

impl Atom {
    pub fn new(sig: &str, index: u32) -> Self {
        Atom { name: format!("{sig}{index}"), sig: sig.to_string() }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Assignment of every signature and field to concrete contents.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Instance {
    pub universe: Vec<Atom>,
    pub sig_contents: BTreeMap<String, BTreeSet<String>>,
    pub field_contents: BTreeMap<String, BTreeSet<(String, String)>>,
}

impl Instance {
    pub fn atom(&self, name: &str) -> Option<&Atom> {
        self.universe.iter().find(|a| a.name == name)
    }

    pub fn sig_of_atom(&self, name: &str) -> Option<&str> {
        self.atom(name).map(|a| a.sig.as_str())
    }

    /// Validate the structural invariants: sig membership of every field
    /// tuple's columns, ONE-sig cardinality and per-owner field
    /// multiplicities.
    pub fn check_wellformed(&self, model: &Model) -> Result<(), String> {
        for sig in &model.sigs {
            let contents = self.sig_contents.get(&sig.name).cloned().unwrap_or_default();
            for atom in &contents {
                if self.sig_of_atom(atom) != Some(sig.name.as_str()) {
                    return Err(format!("atom {atom} is not in the pool of sig {}", sig.name));
                }
            }
            let n = contents.len();
            let ok = match sig.mult {
                Multiplicity::One => n == 1,
                Multiplicity::Lone => n <= 1,
                Multiplicity::Some => n >= 1,
                Multiplicity::Set => true,
            };
            if !ok {
                return Err(format!(
                    "sig {} has {n} atoms, violating `{}`",
                    sig.name,
                    sig.mult.keyword()
                ));
            }
        }
        for field in model.fields() {
            let owner = self.sig_contents.get(&field.owner).cloned().unwrap_or_default();
            let target = self.sig_contents.get(&field.target).cloned().unwrap_or_default();
            let tuples = self.field_contents.get(&field.name).cloned().unwrap_or_default();
            for (a, b) in &tuples {
                if !owner.contains(a) {
                    return Err(format!("field {}: column atom {a} outside {}", field.name, field.owner));
                }
                if !target.contains(b) {
                    return Err(format!("field {}: column atom {b} outside {}", field.name, field.target));
                }
            }
            if field.mult != Multiplicity::Set {
                for a in &owner {
                    let n = tuples.iter().filter(|(x, _)| x == a).count();
                    let ok = match field.mult {
                        Multiplicity::One => n == 1,
                        Multiplicity::Lone => n <= 1,
                        Multiplicity::Some => n >= 1,
                        Multiplicity::Set => true,
                    };
                    if !ok {
                        return Err(format!(
                            "field {}: owner {a} maps to {n} atoms, violating `{}`",
                            field.name,
                            field.mult.keyword()
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> InstanceJson {
        InstanceJson {
            universe: self.universe.iter().map(|a| a.name.clone()).collect(),
            sigs: self
                .sig_contents
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().cloned().collect()))
                .collect(),
            fields: self
                .field_contents
                .iter()
                .map(|(k, v)| {
                    (k.clone(), v.iter().map(|(a, b)| vec![a.clone(), b.clone()]).collect())
                })
                .collect(),
        }
    }

    /// Rebuild an instance from its JSON form. Atom signatures are recovered
    /// from the `SigName + index` naming convention against the model's sigs.
    pub fn from_json(json: &InstanceJson, model: &Model) -> Result<Instance, String> {
        let mut universe = Vec::new();
        for name in &json.universe {
            let sig = model
                .sigs
                .iter()
                .map(|s| &s.name)
                .filter(|s| {
                    name.starts_with(s.as_str())
                        && name[s.len()..].chars().all(|c| c.is_ascii_digit())
                        && !name[s.len()..].is_empty()
                })
                // longest matching sig name wins, e.g. `State10` vs sig `S`
                .max_by_key(|s| s.len())
                .ok_or_else(|| format!("atom `{name}` does not match any signature pool"))?;
            universe.push(Atom { name: name.clone(), sig: sig.clone() });
        }
        let mut sig_contents: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for sig in &model.sigs {
            sig_contents.insert(sig.name.clone(), BTreeSet::new());
        }
        for (name, atoms) in &json.sigs {
            if !sig_contents.contains_key(name) {
                return Err(format!("unknown signature `{name}` in instance"));
            }
            sig_contents.insert(name.clone(), atoms.iter().cloned().collect());
        }
        let mut field_contents: BTreeMap<String, BTreeSet<(String, String)>> = BTreeMap::new();
        for field in model.fields() {
            field_contents.insert(field.name.clone(), BTreeSet::new());
        }
        for (name, tuples) in &json.fields {
            if !field_contents.contains_key(name) {
                return Err(format!("unknown field `{name}` in instance"));
            }
            let mut set = BTreeSet::new();
            for t in tuples {
                if t.len() != 2 {
                    return Err(format!("field `{name}`: tuple {t:?} is not binary"));
                }
                set.insert((t[0].clone(), t[1].clone()));
            }
            field_contents.insert(name.clone(), set);
        }
        Ok(Instance { universe, sig_contents, field_contents })
    }
}

/// Wire format shared with the CLI:
/// `{"universe":[...], "sigs":{name:[atoms]}, "fields":{name:[[a,b],...]}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceJson {
    pub universe: Vec<String>,
    pub sigs: BTreeMap<String, Vec<String>>,
    pub fields: BTreeMap<String, Vec<Vec<String>>>,
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (sig, atoms) in &self.sig_contents {
            let list: Vec<&str> = atoms.iter().map(|s| s.as_str()).collect();
            writeln!(f, "{sig} = {{{}}}", list.join(", "))?;
        }
        for (field, tuples) in &self.field_contents {
            let list: Vec<String> =
                tuples.iter().map(|(a, b)| format!("{a}->{b}")).collect();
            writeln!(f, "{field} = {{{}}}", list.join(", "))?;
        }
        Ok(())
    }
}
