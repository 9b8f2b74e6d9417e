//! Whether the agent settled at the head may leave to join the pool.
//!
//! The lead does the walking: it visits the port-1 neighbor (or the parent)
//! and reports back, and ψ(x) itself never leaves before the decision.

use crate::agents::{AgentId, AgentState, Phase, Role, Task};
use crate::graph::Port;
use crate::p1tree::DfsNodeType;
use crate::runtime::{Action, Local, Marker};

use super::{find_by_id, general, probe, rooted, scan};

/// `scout_phase` values left behind by a finished errand.
const CHECKED: u8 = 5;
const PULLED: u8 = 6;

pub(super) fn evaluate(l: &mut Local<'_>, x: usize) -> Action {
    let a = l.get(x);
    if a.is_root() {
        l.mark(Marker::Decision);
        return rooted::depart(l);
    }
    if !a.vacated_neighbor {
        match a.node_type {
            DfsNodeType::Visited => return errand(l, x, Task::CheckPortOne),
            DfsNodeType::FullyVisited | DfsNodeType::PartiallyVisited => {
                // a port-1 neighbor that itself left one hop from a pinned node
                let s = scan(l);
                let a = l.get(x);
                let chained = a.port_at_p1_neighbor != Some(1)
                    && find_by_id(l, &s.members, a.p1_neighbor).is_some_and(|z| {
                        let z = l.get(z);
                        z.state == AgentState::SettledScout && !z.free && z.vacate_depth == 1
                    });
                if chained {
                    leave(l, x, 2, None);
                    l.mark(Marker::Decision);
                    return rooted::depart(l);
                }
                return errand(l, x, Task::CheckPortOne);
            }
            DfsNodeType::Unvisited => {}
        }
    }
    try_pull(l, x)
}

fn try_pull(l: &mut Local<'_>, x: usize) -> Action {
    if l.get(x).parent.is_some_and(|(_, q)| q == 1) {
        return errand(l, x, Task::PullParent);
    }
    l.mark(Marker::Decision);
    rooted::depart(l)
}

fn errand(l: &mut Local<'_>, x: usize, kind: Task) -> Action {
    let (parent, parent_port) = (l.get(x).parent, l.get(x).parent_port);
    let me = l.me_mut();
    me.clear_scout_fields();
    me.task = kind;
    me.ctx.phase = Phase::Vacate;
    if kind == Task::PullParent {
        me.scout_port = parent_port;
        me.scout_p1p1_neighbor = parent.map(|p| p.0);
        me.scout_port_at_p1p1_neighbor = parent_port;
    }
    errand_step(l)
}

fn own_settled(l: &Local<'_>) -> Option<usize> {
    let me = l.me();
    l.here().iter().copied().find(|&i| {
        let a = l.get(i);
        a.role == Role::Home && a.tree_label.same_tree(&me.tree_label)
    })
}

/// The lead's own walk: one hop out, look, one hop back.
pub(super) fn errand_step(l: &mut Local<'_>) -> Action {
    let arrival = l.me().arrival_port.unwrap_or(0);
    let task = l.me().task;
    if l.me().scout_phase == 0 {
        let me = l.me_mut();
        me.scout_phase = 1;
        return Action::Move(if task == Task::PullParent { me.scout_port.unwrap_or(0) } else { 1 });
    }
    match task {
        Task::CheckPortOne => {
            if let Some(w) = own_settled(l) {
                let id = l.get(w).id;
                l.get_mut(w).vacated_neighbor = true;
                let me = l.me_mut();
                me.scout_p1_neighbor = Some(id);
                me.scout_port_at_p1_neighbor = Some(arrival);
            }
            let me = l.me_mut();
            me.scout_phase = CHECKED;
        }
        _ => {
            let expected = l.me().scout_p1p1_neighbor;
            let head: Option<AgentId> = l.me().ctx.prev_id;
            let back: Option<Port> = l.me().scout_port_at_p1p1_neighbor;
            if let Some(z) = own_settled(l).filter(|&z| {
                let a = l.get(z);
                Some(a.id) == expected && !a.vacated_neighbor && !a.is_root()
            }) {
                let a = l.get_mut(z);
                a.state = AgentState::SettledScout;
                a.role = Role::Member;
                a.vacate_depth = 1;
                a.p1_neighbor = head;
                a.port_at_p1_neighbor = back;
                a.head_here = false;
                a.task = Task::Move(arrival);
                let id = a.id;
                l.mark(Marker::Vacate { agent: id });
                let me = l.me_mut();
                me.scout_found = Some(id);
                me.ctx.group_size += 1;
            }
            l.me_mut().scout_phase = PULLED;
        }
    }
    l.me_mut().task = Task::Idle;
    Action::Move(arrival)
}

/// Turns ψ(x) into a scout of the pool.
fn leave(l: &mut Local<'_>, x: usize, depth: u8, p1: Option<(AgentId, Port)>) {
    let a = l.get_mut(x);
    a.state = AgentState::SettledScout;
    a.role = Role::Member;
    a.vacate_depth = depth;
    a.head_here = false;
    if let Some((w, p)) = p1 {
        a.p1_neighbor = Some(w);
        a.port_at_p1_neighbor = Some(p);
    }
    let id = a.id;
    l.me_mut().ctx.group_size += 1;
    l.mark(Marker::Vacate { agent: id });
}

/// Back from an errand with the whole group present.
pub(super) fn finish(l: &mut Local<'_>) -> Action {
    let s = scan(l);
    let Some(x) = probe::psi(l, &s) else {
        // a larger traversal took the node's agent meanwhile
        return general::lose(l, None, None);
    };
    let me = l.me();
    let (phase, found, port, pulled) =
        (me.scout_phase, me.scout_p1_neighbor, me.scout_port_at_p1_neighbor, me.scout_found);
    l.me_mut().clear_scout_fields();
    match phase {
        CHECKED => match found.zip(port) {
            Some(p1) => {
                leave(l, x, 1, Some(p1));
                l.mark(Marker::Decision);
                rooted::depart(l)
            }
            None => try_pull(l, x),
        },
        PULLED => {
            l.mark(Marker::Decision);
            if pulled.is_some() {
                l.get_mut(x).vacated_neighbor = true;
            }
            rooted::depart(l)
        }
        _ => rooted::depart(l),
    }
}
