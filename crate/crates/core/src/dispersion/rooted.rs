//! The head's arrival, decision and departure at one node.

use crate::agents::{AgentState, LeadContext, Phase, Role, Task};
use crate::graph::{edge_type, EdgeType};
use crate::p1tree::DfsNodeType;
use crate::runtime::{Action, Local, Marker};

use super::{
    find_by_id, general, grow, hand_over, head_leaves, make_home, move_group, needs_home, probe, retrace, scan, vacate,
    violation, Scan,
};

/// Gives `x` fresh tree pointers for a first visit from the head's context.
fn attach(l: &mut Local<'_>, x: usize, ctx: LeadContext) {
    let parent_port = if ctx.prev_id.is_some() { l.me().arrival_port } else { None };
    let parent = ctx.prev_id.zip(ctx.child_port);
    let a = l.get_mut(x);
    a.clear_tree_fields();
    a.parent = parent;
    a.parent_port = parent_port;
    a.node_type = DfsNodeType::Visited;
    a.sibling = ctx.sibling_details;
    if let (Some(pp), Some((pid, q))) = (parent_port, parent) {
        a.port_one_edge = pp == 1 || q == 1;
        if pp == 1 {
            a.p1_neighbor = Some(pid);
            a.port_at_p1_neighbor = Some(q);
        }
    }
}

pub(super) fn arrive(l: &mut Local<'_>) -> Action {
    let s = scan(l);
    let ctx = l.me().ctx;
    let tree = l.me().tree_label;
    let me = l.index();
    let x;
    let eval;
    match ctx.expected_host {
        None => {
            if s.own.is_some() {
                return violation(l, "fresh node already holds own agent");
            }
            if let Some(f) = s.foreign {
                let from = l.get(f).tree_label;
                if from > tree {
                    return general::lose(l, Some(from), None);
                }
                let into = grow(l, 1);
                l.mark(Marker::Merge { from, into });
                x = f;
            } else {
                let Some(h) = s.members.iter().copied().filter(|&i| needs_home(l.get(i))).max_by_key(|&i| l.get(i).id)
                else {
                    return violation(l, "no agent left to settle");
                };
                x = h;
                l.me_mut().ctx.group_size -= 1;
                let id = l.get(h).id;
                l.mark(Marker::Settle { agent: id });
            }
            make_home(l, x);
            attach(l, x, ctx);
            eval = true;
        }
        Some(h) => {
            if let Some(o) = s.own {
                if l.get(o).id != h {
                    return violation(l, "unexpected own agent on node");
                }
                x = o;
            } else if let Some(m) = find_by_id(l, &s.members, Some(h)) {
                if let Some(f) = s.foreign {
                    let from = l.get(f).tree_label;
                    if from > tree {
                        return general::lose(l, Some(from), None);
                    }
                    general::evict(l, f);
                }
                x = m;
            } else if let Some(f) = s.foreign {
                let from = l.get(f).tree_label;
                return general::lose(l, Some(from), None);
            } else {
                // taken and carried off by a larger traversal
                return general::lose(l, None, None);
            }
            if ctx.reconfig {
                let parent_port = l.me().arrival_port;
                let parent = ctx.prev_id.zip(ctx.child_port);
                let a = l.get_mut(x);
                a.parent = parent;
                a.parent_port = parent_port;
                a.detached_sibling = a.sibling;
                a.sibling = ctx.sibling_details;
                a.node_type = DfsNodeType::Visited;
                a.port_one_edge = true;
                if let (Some(1), Some((pid, q))) = (parent_port, parent) {
                    a.p1_neighbor = Some(pid);
                    a.port_at_p1_neighbor = Some(q);
                }
                let id = a.id;
                l.mark(Marker::Reconfigure { agent: id });
            }
            eval = ctx.reconfig && l.get(x).role == Role::Home;
        }
    }
    let x_id = l.get(x).id;
    let home = l.get(x).role == Role::Home;
    l.get_mut(x).head_here = home;
    {
        let c = &mut l.me_mut().ctx;
        c.prev_id = Some(x_id);
        c.child_port = None;
        if ctx.expected_host.is_none() || ctx.reconfig {
            c.sibling_details = None;
        }
        c.expected_host = None;
        c.reconfig = false;
        c.vacate_eval = eval;
    }
    let s = scan(l);
    if !s.members.iter().any(|&i| needs_home(l.get(i))) {
        let tree = l.me().tree_label;
        l.mark(Marker::ConstructionEnd { tree });
        l.get_mut(x).recent_port = None;
        return begin_retrace(l, &s.members, x == me);
    }
    let waiting = s.members.iter().filter(|&&i| needs_home(l.get(i))).count();
    let weight = l.me().tree_label.weight as usize;
    let has_parent = l.get(x).parent_port.is_some() as usize;
    let degree = l.degree();
    let shortcut = degree + 1 >= weight && degree >= waiting + has_parent;
    probe::start(l, &s, x, shortcut)
}

/// Starts the post-order walk with the pool on the current node. When the
/// caller is leaving the pool, the walk is handed to the next lead.
pub(super) fn begin_retrace(l: &mut Local<'_>, members: &[usize], caller_leaves: bool) -> Action {
    let tree = l.me().tree_label;
    l.mark(Marker::RetraceStart { tree });
    {
        let c = &mut l.me_mut().ctx;
        c.phase = Phase::RetraceFresh;
        c.next_agent_id = None;
        c.next_port = None;
    }
    let me = l.index();
    let rest: Vec<usize> = members.iter().copied().filter(|&i| i != me || !caller_leaves).collect();
    if rest.is_empty() {
        head_leaves(l);
        let a = l.me_mut();
        a.lead = false;
        a.ctx = LeadContext::default();
        return Action::Stay;
    }
    if caller_leaves {
        hand_over(l, &rest);
        return Action::Stay;
    }
    retrace::step(l)
}

fn probed_type(l: &Local<'_>, x: usize) -> DfsNodeType {
    let a = l.get(x);
    let parent_type = a.parent_port.zip(a.parent).map(|(pp, (_, q))| edge_type(pp, q));
    match a.probe_result {
        Some(b) if b.edge_type == EdgeType::Tpq && parent_type == Some(EdgeType::Tpq) && !a.port_one_edge => {
            DfsNodeType::PartiallyVisited
        }
        Some(_) => DfsNodeType::Visited,
        // an uncovered node waits for its port-1 neighbor, an ancestor
        None if !a.port_one_edge && !a.is_root() => DfsNodeType::PartiallyVisited,
        None => DfsNodeType::FullyVisited,
    }
}

/// After the probe: type the node, run the vacate rules if due, then move.
pub(super) fn decide(l: &mut Local<'_>, _s: &Scan, x: usize) -> Action {
    let new_type = probed_type(l, x);
    let changed = l.get(x).node_type != new_type;
    l.get_mut(x).node_type = new_type;
    let eval = std::mem::take(&mut l.me_mut().ctx.vacate_eval) || changed;
    if eval && l.get(x).state == AgentState::Settled {
        vacate::evaluate(l, x)
    } else {
        depart(l)
    }
}

/// Moves the group forward through ψ(x).probeResult, or back to the parent.
pub(super) fn depart(l: &mut Local<'_>) -> Action {
    let s = scan(l);
    let Some(x) = probe::psi(l, &s) else {
        // a larger traversal took the node's agent meanwhile
        return general::lose(l, None, None);
    };
    let a = l.get(x).clone();
    let port;
    let mut ctx = l.me().ctx;
    match (a.node_type, a.probe_result) {
        (DfsNodeType::Visited, Some(b)) => {
            port = b.port_at_x;
            let psi = l.get_mut(x);
            psi.recent_port = Some(port);
            if psi.recent_child.is_some() {
                ctx.sibling_details = ctx.child_details;
                ctx.child_details = None;
            }
            psi.recent_child = Some(port);
            if b.edge_type != EdgeType::Tpq {
                psi.port_one_edge = true;
            }
            ctx.child_port = Some(port);
            ctx.expected_host = b.neighbor_settled_agent;
            ctx.reconfig = b.neighbor_settled_agent.is_some();
        }
        _ => {
            let (Some(pp), Some((pid, q))) = (a.parent_port, a.parent) else {
                return violation(l, "head stuck at the root with agents to place");
            };
            port = pp;
            ctx.child_details = Some((a.id, q));
            ctx.child_port = None;
            ctx.expected_host = Some(pid);
            ctx.reconfig = false;
            l.get_mut(x).recent_port = Some(pp);
        }
    }
    l.get_mut(x).head_here = false;
    ctx.phase = Phase::Arrive;
    l.me_mut().ctx = ctx;
    move_group(l, &s.members, port)
}

/// Every agent still needing a home got an empty neighbor: send them there
/// and retrace with whatever is left.
pub(super) fn shortcut(l: &mut Local<'_>, s: &Scan, x: usize, waiting: &[usize]) -> Action {
    let x_id = l.get(x).id;
    let tree = l.me().tree_label;
    let t = probed_type(l, x);
    l.get_mut(x).node_type = t;
    l.mark(Marker::ConstructionEnd { tree });
    let me = l.index();
    let mut my_port = None;
    for &j in waiting {
        let a = l.get_mut(j);
        let port = a.recent_port.take().expect("reserved port");
        a.parent = Some((x_id, port));
        if j == me {
            a.task = Task::SettleHere;
            my_port = Some(port);
        } else {
            a.task = Task::SettleVia(port);
        }
    }
    l.me_mut().ctx.group_size -= waiting.len() as u32;
    let rest: Vec<usize> = s.members.iter().copied().filter(|j| !waiting.contains(j)).collect();
    let a = l.get_mut(x);
    a.recent_port = None;
    a.head_here = false;
    match my_port {
        Some(p) => {
            begin_retrace(l, &rest, true);
            Action::Move(p)
        }
        None => begin_retrace(l, &rest, false),
    }
}
