//! Propagation dependencies between error model instances.
//!
//! An `out` propagation of a sender reaches a receiver through one of three
//! channels:
//!
//! * **binding**: a platform's propagations reach every application bound to
//!   it, and an application's reach its platform;
//! * **connection**: from the component owning the connection's source port
//!   to the component owning its target port;
//! * **bus access**: a bus's propagations reach every accessor, and an
//!   accessor's reach the bus.
//!
//! At the receiver a `guard_in` rule on the arrival feature (connections only)
//! takes priority; otherwise the propagation matches an `in` propagation of
//! the same name, or produces no link at all.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::aadl::{ArchitectureModel, Direction, ErrorModelInstance, GuardEffect};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinkEffect {
    InProp(String),
    Masked,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    Binding,
    Connection {
        source_feature: String,
        target_feature: String,
    },
    BusAccess,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::Binding => f.write_str("binding"),
            Channel::Connection {
                source_feature,
                target_feature,
            } => write!(f, "connection({source_feature}->{target_feature})"),
            Channel::BusAccess => f.write_str("bus_access"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DependencyLink {
    pub sender: String,
    pub out_prop: String,
    pub receiver: String,
    pub effect: LinkEffect,
    pub channel: Channel,
}

impl DependencyLink {
    pub fn key(&self) -> (&str, &str, &str) {
        (&self.sender, &self.out_prop, &self.receiver)
    }
}

/// Receiver candidates `(sender, receiver, channel, arrival feature)`.
fn routes(model: &ArchitectureModel) -> Vec<(String, String, Channel, Option<String>)> {
    let mut out = Vec::new();
    for b in &model.bindings {
        out.push((
            b.platform.clone(),
            b.application.clone(),
            Channel::Binding,
            None,
        ));
        out.push((
            b.application.clone(),
            b.platform.clone(),
            Channel::Binding,
            None,
        ));
    }
    for c in &model.connections {
        out.push((
            c.source.component.clone(),
            c.target.component.clone(),
            Channel::Connection {
                source_feature: c.source.feature.clone(),
                target_feature: c.target.feature.clone(),
            },
            Some(c.target.feature.clone()),
        ));
    }
    for a in &model.bus_accesses {
        out.push((a.bus.clone(), a.accessor.clone(), Channel::BusAccess, None));
        out.push((a.accessor.clone(), a.bus.clone(), Channel::BusAccess, None));
    }
    out
}

fn effect_at(
    receiver: &ErrorModelInstance,
    arrival: Option<&str>,
    prop: &str,
) -> Option<LinkEffect> {
    if let Some(feature) = arrival {
        if let Some(rule) = receiver
            .guard_in_rules
            .iter()
            .find(|r| r.matches(feature, prop))
        {
            return Some(match &rule.effect {
                GuardEffect::Raise(n) => LinkEffect::InProp(n.clone()),
                GuardEffect::Mask => LinkEffect::Masked,
            });
        }
    }
    receiver
        .has_propagation(prop, Direction::In)
        .then(|| LinkEffect::InProp(prop.to_string()))
}

/// All propagation links of a validated model, sorted by
/// `(sender, out_prop, receiver)` with one link per key.
///
/// When several channels deliver the same propagation to the same receiver,
/// the first in channel order (binding, connection, bus access) is kept.
pub fn find_dependencies(model: &ArchitectureModel) -> Vec<DependencyLink> {
    let instances: BTreeMap<String, ErrorModelInstance> = match model.error_model_instances() {
        Ok(list) => list.into_iter().map(|i| (i.owner.clone(), i)).collect(),
        Err(_) => return Vec::new(),
    };
    let mut candidates = BTreeSet::new();
    for (sender, receiver, channel, arrival) in routes(model) {
        if sender == receiver {
            continue;
        }
        let (Some(s), Some(r)) = (instances.get(&sender), instances.get(&receiver)) else {
            continue;
        };
        for prop in s.out_propagations() {
            if let Some(effect) = effect_at(r, arrival.as_deref(), prop) {
                candidates.insert(DependencyLink {
                    sender: sender.clone(),
                    out_prop: prop.to_string(),
                    receiver: receiver.clone(),
                    effect,
                    channel: channel.clone(),
                });
            }
        }
    }
    let mut ordered: Vec<_> = candidates.into_iter().collect();
    ordered.sort_by(|a, b| a.key().cmp(&b.key()).then(a.channel.cmp(&b.channel)));
    ordered.dedup_by(|later, first| later.key() == first.key());
    ordered
}

/// Declared `out` propagations that produce no link at all, sorted.
pub fn unmatched_out_propagations(model: &ArchitectureModel) -> Vec<(String, String)> {
    let linked: BTreeSet<(String, String)> = find_dependencies(model)
        .into_iter()
        .map(|l| (l.sender, l.out_prop))
        .collect();
    let mut out = BTreeSet::new();
    if let Ok(instances) = model.error_model_instances() {
        for emi in &instances {
            for p in emi.out_propagations() {
                let key = (emi.owner.clone(), p.to_string());
                if !linked.contains(&key) {
                    out.insert(key);
                }
            }
        }
    }
    out.into_iter().collect()
}
