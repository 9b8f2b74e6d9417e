//! The dispersion algorithms as per-agent state machines.
//!
//! Every group of travelling agents has one coordinator, the `lead`: the
//! lowest-ID member. Only the lead looks around; it waits until its whole
//! group is back on its node and idle, decides, and writes work orders into
//! the members' `task` mailboxes. Members with nothing in their mailbox run
//! null cycles.

mod general;
pub mod invariants;
mod probe;
mod retrace;
mod rooted;
mod vacate;

use crate::agents::{Agent, AgentState, Role, Task, TreeLabel};
use crate::graph::Port;
use crate::runtime::{Action, Algorithm, Configuration, Local};

pub use probe::{resolve, Evidence};

/// Rooted and general dispersion; the rooted case is the general protocol
/// with a single group.
#[derive(Debug, Clone, Copy, Default)]
pub struct Dispersion;

impl Algorithm for Dispersion {
    fn cycle(&self, l: &mut Local<'_>) -> Action {
        match l.me().task {
            Task::Move(p) => {
                l.me_mut().task = Task::Idle;
                return Action::Move(p);
            }
            Task::Scout => return probe::scout_step(l),
            Task::CheckPortOne | Task::PullParent => return vacate::errand_step(l),
            Task::SettleVia(p) => {
                l.me_mut().task = Task::SettleHere;
                return Action::Move(p);
            }
            Task::SettleHere => return general::settle_here(l),
            Task::Idle => {}
        }
        if l.me().role == Role::Initial {
            return general::organize(l);
        }
        if l.me().lead && barrier(l) {
            return lead_step(l);
        }
        Action::Stay
    }
}

/// True iff all positions are distinct and everyone is settled.
pub fn check_dispersed(cfg: &Configuration) -> bool {
    if cfg.agents.iter().any(|a| a.state != AgentState::Settled) {
        return false;
    }
    let mut seen = vec![false; cfg.n()];
    cfg.positions.iter().all(|&p| !std::mem::replace(&mut seen[p], true))
}

fn lead_step(l: &mut Local<'_>) -> Action {
    use crate::agents::Phase::*;
    if l.me().ctx.phase != Chase {
        // a larger traversal took this node while we were busy
        let s = scan(l);
        if let Some(f) = s.foreign.map(|f| l.get(f).tree_label).filter(|t| *t > l.me().tree_label) {
            return general::lose(l, Some(f), None);
        }
    }
    match l.me().ctx.phase {
        Arrive => rooted::arrive(l),
        Probe | ProbeShortcut => probe::aggregate(l),
        Vacate => vacate::finish(l),
        RetraceFresh | RetraceUp | RetraceDown => retrace::step(l),
        Chase => general::chase(l),
    }
}

fn same_group(lead: &Agent, a: &Agent) -> bool {
    // a lead that just settled still speaks for the group it came with
    let role = if lead.role == Role::Home { Role::Member } else { lead.role };
    a.role == role && a.tree_label.same_tree(&lead.tree_label)
}

/// The whole group is here and idle.
fn barrier(l: &Local<'_>) -> bool {
    let me = l.me();
    let present = l
        .here()
        .iter()
        .filter(|&&i| {
            let a = l.get(i);
            same_group(me, a) && a.task == Task::Idle
        })
        .count();
    present as u32 == me.ctx.group_size
}

/// What the lead sees on its node.
pub(crate) struct Scan {
    /// Idle group members, ascending ID.
    pub members: Vec<usize>,
    /// A settled agent of the lead's own tree.
    pub own: Option<usize>,
    /// A settled agent of some other tree.
    pub foreign: Option<usize>,
}

pub(crate) fn scan(l: &Local<'_>) -> Scan {
    let me = l.me();
    let mut s = Scan { members: Vec::new(), own: None, foreign: None };
    for &i in l.here() {
        let a = l.get(i);
        if a.state == AgentState::Settled && a.role == Role::Home {
            if a.tree_label.same_tree(&me.tree_label) {
                s.own = Some(i);
            } else {
                s.foreign = Some(i);
            }
        } else if same_group(me, a) && a.task == Task::Idle {
            s.members.push(i);
        }
    }
    s.members.sort_by_key(|&i| l.get(i).id);
    s
}

pub(crate) fn find_by_id(l: &Local<'_>, members: &[usize], id: Option<crate::agents::AgentId>) -> Option<usize> {
    let id = id?;
    members.iter().copied().find(|&i| l.get(i).id == id)
}

/// Members that still need a node of their own.
pub(crate) fn needs_home(a: &Agent) -> bool {
    a.state == AgentState::Unsettled || (a.state == AgentState::SettledScout && a.free)
}

/// Hands the coordinator context to the lowest-ID member if that is not the
/// caller. Returns the index of the lead afterwards.
pub(crate) fn hand_over(l: &mut Local<'_>, members: &[usize]) -> Option<usize> {
    let me = l.index();
    let new = members.iter().copied().min_by_key(|&i| l.get(i).id)?;
    if new != me {
        let (ctx, label) = (l.me().ctx, l.me().tree_label);
        let a = l.get_mut(new);
        a.ctx = ctx;
        a.lead = true;
        a.tree_label = label;
        let me = l.me_mut();
        me.lead = false;
        me.ctx = Default::default();
    }
    Some(new)
}

/// Sends every member through `port`. The caller moves with them if it is a member.
pub(crate) fn move_group(l: &mut Local<'_>, members: &[usize], port: Port) -> Action {
    head_leaves(l);
    hand_over(l, members);
    let me = l.index();
    let mut moving = false;
    for &i in members {
        if i == me {
            moving = true;
        } else {
            l.get_mut(i).task = Task::Move(port);
        }
    }
    if moving {
        Action::Move(port)
    } else {
        Action::Stay
    }
}

/// Clears the head marker on this node's settled agent of the lead's tree.
pub(crate) fn head_leaves(l: &mut Local<'_>) {
    if let Some(o) = scan(l).own {
        l.get_mut(o).head_here = false;
    }
}

/// Copies the lead's label with the weight raised by `by`.
pub(crate) fn grow(l: &mut Local<'_>, by: u32) -> TreeLabel {
    let me = l.me_mut();
    me.tree_label.weight += by;
    me.tree_label
}

/// Makes `i` the settled agent of this node for the lead's tree.
pub(crate) fn make_home(l: &mut Local<'_>, i: usize) {
    let label = l.me().tree_label;
    let a = l.get_mut(i);
    a.state = AgentState::Settled;
    a.role = Role::Home;
    a.free = false;
    a.tree_label = label;
}

pub(crate) fn violation(l: &mut Local<'_>, msg: impl Into<String>) -> Action {
    l.mark(crate::runtime::Marker::Violation(msg.into()));
    Action::Stay
}
