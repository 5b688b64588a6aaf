//! Channel systems: a fixed set of program graphs communicating over
//! point-to-point channels of capacity 0 (handshake) or 1 (single buffer).

use std::collections::BTreeMap;

use crate::error::ModelError;
use crate::model::guard::Evaluation;
use crate::model::pg::{ChannelId, CommDir, Label, Payload, ProgramGraph, VarDecl};
use crate::value::Message;

/// A declared channel between two named processes.
#[derive(Debug, Clone)]
pub struct Channel {
    pub id: ChannelId,
    /// 0 = handshake (rendezvous), 1 = single-slot buffer.
    pub capacity: u8,
}

/// The static structure of a system: processes, channels, and shared
/// variables. Local variable references inside each process are qualified to
/// `Process.var` at build time; shared variables keep their bare names.
#[derive(Debug, Clone)]
pub struct ChannelSystem {
    pub processes: Vec<ProgramGraph>,
    pub channels: Vec<Channel>,
    pub shared_vars: Vec<VarDecl>,
    /// Channel whose delivery marks the start of a new tick, if any.
    pub tick_channel: Option<usize>,
}

impl ChannelSystem {
    pub fn process_index(&self, name: &str) -> Option<usize> {
        self.processes.iter().position(|p| p.name == name)
    }

    pub fn channel_index(&self, id: &ChannelId) -> Option<usize> {
        self.channels.iter().position(|c| &c.id == id)
    }

    /// The initial configuration: every process at its initial location, all
    /// variables at their initial values, all buffers empty.
    pub fn initial_configuration(&self) -> Configuration {
        let mut vars: Evaluation = BTreeMap::new();
        for v in &self.shared_vars {
            vars.insert(v.name.clone(), v.init.clone());
        }
        for p in &self.processes {
            for v in &p.vars {
                vars.insert(v.name.clone(), v.init.clone());
            }
        }
        Configuration {
            locations: self.processes.iter().map(|p| p.initial_location).collect(),
            vars,
            buffers: vec![None; self.channels.len()],
        }
    }
}

/// A dynamic state of a channel system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    /// Current location index per process.
    pub locations: Vec<usize>,
    /// All variables, qualified local names plus bare shared names.
    pub vars: Evaluation,
    /// Buffer contents of capacity-1 channels (always `None` for cap 0).
    pub buffers: Vec<Option<Message>>,
}

/// Builds and validates a [`ChannelSystem`].
pub struct ChannelSystemBuilder {
    processes: Vec<ProgramGraph>,
    channels: Vec<Channel>,
    shared_vars: Vec<VarDecl>,
    tick_channel: Option<ChannelId>,
}

impl Default for ChannelSystemBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl ChannelSystemBuilder {
    pub fn new() -> Self {
        ChannelSystemBuilder {
            processes: Vec::new(),
            channels: Vec::new(),
            shared_vars: Vec::new(),
            tick_channel: None,
        }
    }

    pub fn process(&mut self, pg: ProgramGraph) -> Result<&mut Self, ModelError> {
        if self.processes.iter().any(|p| p.name == pg.name) {
            return Err(ModelError::DuplicateProcess(pg.name));
        }
        self.processes.push(pg);
        Ok(self)
    }

    pub fn channel(
        &mut self,
        source: impl Into<String>,
        dest: impl Into<String>,
        capacity: u8,
    ) -> Result<&mut Self, ModelError> {
        let id = ChannelId::new(source, dest);
        if capacity > 1 {
            return Err(ModelError::BadCapacity {
                channel: id.to_string(),
                capacity,
            });
        }
        if id.source == id.dest {
            return Err(ModelError::SelfChannel(id.to_string()));
        }
        if self.channels.iter().any(|c| c.id == id) {
            return Err(ModelError::DuplicateChannel(id.to_string()));
        }
        self.channels.push(Channel { id, capacity });
        Ok(self)
    }

    pub fn shared_var(
        &mut self,
        name: impl Into<String>,
        domain: crate::value::Domain,
        init: Message,
    ) -> Result<&mut Self, ModelError> {
        let name = name.into();
        if self.shared_vars.iter().any(|v| v.name == name) {
            return Err(ModelError::DuplicateVariable(name));
        }
        if !domain.contains(&init) {
            return Err(ModelError::InitOutOfDomain {
                var: name,
                value: init.to_string(),
            });
        }
        self.shared_vars.push(VarDecl { name, domain, init });
        Ok(self)
    }

    /// Marks an existing channel as the tick channel: each delivery on it
    /// increments the tick counter and starts a new observation window.
    pub fn tick_channel(
        &mut self,
        source: impl Into<String>,
        dest: impl Into<String>,
    ) -> &mut Self {
        self.tick_channel = Some(ChannelId::new(source, dest));
        self
    }

    pub fn build(mut self) -> Result<ChannelSystem, ModelError> {
        // Qualify local variable references. A bare name that matches a
        // local declaration of the owning process refers to that local;
        // otherwise it must be a shared variable. Native effects are opaque
        // and must already use final names.
        let shared: Vec<String> = self.shared_vars.iter().map(|v| v.name.clone()).collect();
        for pg in &mut self.processes {
            let proc_name = pg.name.clone();
            let locals: Vec<String> = pg.vars.iter().map(|v| v.name.clone()).collect();
            for v in &mut pg.vars {
                if shared.contains(&v.name) {
                    return Err(ModelError::DuplicateVariable(format!(
                        "{} (local of {} shadows a shared variable)",
                        v.name, proc_name
                    )));
                }
                v.name = format!("{proc_name}.{}", v.name);
            }
            let qualify = |name: &str| -> String {
                if locals.iter().any(|l| l == name) {
                    format!("{proc_name}.{name}")
                } else {
                    name.to_string()
                }
            };
            let mut unknown: Option<String> = None;
            for t in &mut pg.transitions {
                t.guard.rename_vars(&qualify);
                t.guard.visit_vars(&mut |v| {
                    if !is_known(v, &proc_name, &locals, &shared) && unknown.is_none() {
                        unknown = Some(v.to_string());
                    }
                });
                if let Label::Internal(a) = &mut t.label {
                    a.rename_vars(&qualify);
                    a.visit_vars(&mut |v| {
                        if !is_known(v, &proc_name, &locals, &shared) && unknown.is_none() {
                            unknown = Some(v.to_string());
                        }
                    });
                }
                if let Label::Comm(c) = &mut t.label {
                    if let Payload::Var(v) = &mut c.payload {
                        *v = qualify(v);
                        if !is_known(v, &proc_name, &locals, &shared) && unknown.is_none() {
                            unknown = Some(v.clone());
                        }
                    }
                }
            }
            if let Some(v) = unknown {
                return Err(ModelError::UnknownVariable {
                    process: proc_name,
                    var: v,
                });
            }
        }

        // Check channel endpoints exist and comm actions respect endpoint
        // roles: only the source may send, only the dest may receive.
        for ch in &self.channels {
            for end in [&ch.id.source, &ch.id.dest] {
                if !self.processes.iter().any(|p| &p.name == end) {
                    return Err(ModelError::UnknownChannelEndpoint {
                        channel: ch.id.to_string(),
                        process: end.clone(),
                    });
                }
            }
        }
        for pg in &self.processes {
            for t in &pg.transitions {
                if let Label::Comm(c) = &t.label {
                    let ch = self
                        .channels
                        .iter()
                        .find(|ch| ch.id == c.channel)
                        .ok_or_else(|| ModelError::UnknownChannel(c.channel.to_string()))?;
                    let role_ok = match c.dir {
                        CommDir::Send => ch.id.source == pg.name,
                        CommDir::Recv => ch.id.dest == pg.name,
                    };
                    if !role_ok {
                        return Err(ModelError::NotAnEndpoint {
                            process: pg.name.clone(),
                            channel: c.channel.to_string(),
                        });
                    }
                }
            }
        }

        let tick_channel = match &self.tick_channel {
            None => None,
            Some(id) => Some(
                self.channels
                    .iter()
                    .position(|c| &c.id == id)
                    .ok_or_else(|| ModelError::UnknownChannel(id.to_string()))?,
            ),
        };

        Ok(ChannelSystem {
            processes: self.processes,
            channels: self.channels,
            shared_vars: self.shared_vars,
            tick_channel,
        })
    }
}

fn is_known(qualified: &str, proc_name: &str, locals: &[String], shared: &[String]) -> bool {
    if shared.iter().any(|s| s == qualified) {
        return true;
    }
    // Locals appear qualified after the rename above; a foreign qualified
    // name is also accepted (natives in other processes may publish them),
    // as long as it is dotted.
    if let Some(rest) = qualified.strip_prefix(&format!("{proc_name}.")) {
        return locals.iter().any(|l| l == rest);
    }
    qualified.contains('.')
}
